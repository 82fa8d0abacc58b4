//! Deterministic video-to-token preprocessing.
//!
//! The pipeline turns a raw video into a fixed-length token matrix:
//!
//! 1. [`superpixels`] partitions every frame into superpixels, starting from a
//!    rectangular grid and refining it with a local k-means (SLIC).
//! 2. [`okm`] clusters the averaged superpixel features with overlapping
//!    k-means, so every superpixel belongs to exactly `v` of `k` clusters, and
//!    expands the memberships into `k` binary spatiotemporal masks.
//! 3. [`pooling`] computes spatial, temporal and mask-weighted (multi-granular)
//!    tokens over an encoder feature grid and projects their concatenation.
//!
//! Around that core sit [`layout`] (bounding-box plans for object insertion),
//! [`metrics`] (PSNR, SSIM, region-of-no-interest SSIM), [`curation`]
//! (JSON-lines manifests for editing datasets) and [`media`]/[`tensor`] for
//! frame and tensor I/O. [`pipeline`] wires everything together.
//!
//! ```
//! use mgspool::pipeline::{tokenize, PipelineConfig};
//! use mgspool::media::synthetic_video;
//!
//! let video = synthetic_video(4, 24, 24, 7);
//! let mut cfg = PipelineConfig::default();
//! cfg.k = 6;
//! cfg.v = 2;
//! cfg.superpixel.regions_per_frame = 9;
//! cfg.grid = (2, 3, 3);
//! let out = tokenize(&video, None, &cfg).unwrap();
//! assert_eq!(out.projected.rows, 2 + 6 + 3 * 3);
//! ```

pub mod curation;
pub mod error;
pub mod layout;
pub mod media;
pub mod metrics;
pub mod okm;
pub mod pipeline;
pub mod pooling;
pub mod superpixels;
pub mod tensor;

mod font;

pub use error::{Error, Result};
pub use media::{Frame, MaskVideo, VideoTensor};
pub use tensor::{DType, Matrix, TensorData, TensorFile};
