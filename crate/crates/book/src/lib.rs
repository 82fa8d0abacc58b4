//! The guide in `book/` as doctests. Each chapter becomes the docs of one
//! module, so `cargo test --doc` compiles and runs every listing and a
//! failure names the chapter it came from.

#[doc = include_str!("../../../book/src/introduction.md")]
pub mod introduction {}
#[doc = include_str!("../../../book/src/media.md")]
pub mod media {}
#[doc = include_str!("../../../book/src/superpixels.md")]
pub mod superpixels {}
#[doc = include_str!("../../../book/src/clustering.md")]
pub mod clustering {}
#[doc = include_str!("../../../book/src/pooling.md")]
pub mod pooling {}
#[doc = include_str!("../../../book/src/layouts.md")]
pub mod layouts {}
#[doc = include_str!("../../../book/src/metrics.md")]
pub mod metrics {}
#[doc = include_str!("../../../book/src/curation.md")]
pub mod curation {}
#[doc = include_str!("../../../book/src/cli.md")]
pub mod cli {}
