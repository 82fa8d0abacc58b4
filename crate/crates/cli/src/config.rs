use std::path::Path;

use anyhow::{Context, Result};
use mgspool::pipeline::PipelineConfig;

pub const SEED_ENV: &str = "MGS_SEED";

/// Pipeline settings from an optional TOML file, plus whether that file set
/// the seed explicitly.
pub fn load(path: Option<&Path>) -> Result<(PipelineConfig, bool)> {
    let Some(path) = path else {
        return Ok((PipelineConfig::default(), false));
    };
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    parse(&text).with_context(|| format!("parsing {}", path.display()))
}

pub fn parse(text: &str) -> Result<(PipelineConfig, bool)> {
    let table: toml::Table = text.parse()?;
    let has_seed = table.contains_key("seed");
    let cfg: PipelineConfig = table.try_into()?;
    Ok((cfg, has_seed))
}

/// Flag, then config file, then the environment, then 0.
pub fn resolve_seed(flag: Option<u64>, config: Option<u64>, env: Option<&str>) -> Result<u64> {
    if let Some(s) = flag.or(config) {
        return Ok(s);
    }
    match env {
        Some(v) => v
            .trim()
            .parse()
            .with_context(|| format!("{SEED_ENV}={v:?} is not an unsigned integer")),
        None => Ok(0),
    }
}
