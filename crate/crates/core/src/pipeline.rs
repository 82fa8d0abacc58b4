//! End-to-end tokenization (superpixels, overlapping clustering, masks,
//! pooling, projection) and the `k`/`v` sweep.

use std::path::Path;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::media::VideoTensor;
use crate::okm::{masks_from_assignments, okm_cluster, ClusterMasks, OkmResult};
use crate::pooling::{assemble_tokens, toy_encode, FeatureGrid, MgsNormalization, ProjectionMatrix, TokenSet};
use crate::superpixels::{compute_superpixels, SuperpixelConfig, SuperpixelFeatures, SuperpixelMap};
use crate::tensor::{write_tensor, Matrix, TensorFile};

pub const DEFAULT_K: usize = 25;
pub const DEFAULT_V: usize = 6;

/// Values of `k` and `v` enumerated by [`sweep`] by default.
pub const SWEEP_K: [usize; 3] = [20, 25, 30];
pub const SWEEP_V: [usize; 6] = [1, 2, 4, 5, 6, 10];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PipelineConfig {
    /// Number of clusters.
    pub k: usize,
    /// Clusters per superpixel.
    pub v: usize,
    pub superpixel: SuperpixelConfig,
    /// Token grid `(t, h, w)` of the stand-in encoder.
    pub grid: (usize, usize, usize),
    pub seed: u64,
    pub max_iter: usize,
    pub normalization: MgsNormalization,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            k: DEFAULT_K,
            v: DEFAULT_V,
            superpixel: SuperpixelConfig::default(),
            grid: (4, 8, 8),
            seed: 0,
            max_iter: 100,
            normalization: MgsNormalization::Normalized,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct StageTimings {
    pub superpixels_ms: f64,
    pub clustering_ms: f64,
    pub masks_ms: f64,
    pub pooling_ms: f64,
    pub projection_ms: f64,
    pub total_ms: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub k: usize,
    pub v: usize,
    pub seed: u64,
    pub frames: usize,
    pub height: usize,
    pub width: usize,
    pub superpixels: usize,
    pub okm_iterations: usize,
    pub okm_converged: bool,
    pub empty_clusters: usize,
    /// `[t, h, w, d]` of the feature grid.
    pub grid: [usize; 4],
    /// Shape of the projected token matrix.
    pub tokens: [usize; 2],
    pub timings: StageTimings,
}

#[derive(Debug, Clone)]
pub struct TokenizeOutput {
    /// Projected tokens, `(t + k + h·w)×d′`.
    pub projected: Matrix,
    pub tokens: TokenSet,
    pub masks: ClusterMasks,
    pub map: SuperpixelMap,
    pub okm: OkmResult,
    pub report: RunReport,
}

fn stage<T>(name: &'static str, r: Result<T>) -> Result<T> {
    r.map_err(|e| Error::Stage {
        stage: name,
        inner: Box::new(e),
    })
}

fn ms(start: Instant) -> f64 {
    start.elapsed().as_secs_f64() * 1e3
}

fn check_config(cfg: &PipelineConfig) -> Result<()> {
    let (t, h, w) = cfg.grid;
    if t == 0 || h == 0 || w == 0 {
        return Err(Error::arg("token grid dimensions must all be at least 1"));
    }
    cfg.superpixel.validate()
}

/// Tokenizes `video` with the identity projection. Without a feature grid
/// the stand-in encoder [`toy_encode`] is used at `cfg.grid`.
pub fn tokenize(video: &VideoTensor, grid: Option<FeatureGrid>, cfg: &PipelineConfig) -> Result<TokenizeOutput> {
    tokenize_with(video, grid, None, cfg)
}

pub fn tokenize_with(
    video: &VideoTensor,
    grid: Option<FeatureGrid>,
    projection: Option<&ProjectionMatrix>,
    cfg: &PipelineConfig,
) -> Result<TokenizeOutput> {
    let total = Instant::now();
    stage("config", check_config(cfg))?;
    let grid = match grid {
        Some(g) => g,
        None => {
            let (t, h, w) = cfg.grid;
            stage("encoder", toy_encode(video, t, h, w))?
        }
    };
    let start = Instant::now();
    let (map, features) = stage("superpixels", compute_superpixels(video, &cfg.superpixel))?;
    let superpixels_ms = ms(start);
    let mut out = run_from_superpixels(map, &features, &grid, projection, cfg)?;
    out.report.seed = cfg.seed;
    out.report.timings.superpixels_ms = superpixels_ms;
    out.report.timings.total_ms = ms(total);
    Ok(out)
}

fn run_from_superpixels(
    map: SuperpixelMap,
    features: &SuperpixelFeatures,
    grid: &FeatureGrid,
    projection: Option<&ProjectionMatrix>,
    cfg: &PipelineConfig,
) -> Result<TokenizeOutput> {
    let mut timings = StageTimings::default();

    let start = Instant::now();
    let okm = stage(
        "clustering",
        okm_cluster(features, cfg.k, cfg.v, cfg.max_iter, cfg.seed),
    )?;
    timings.clustering_ms = ms(start);

    let start = Instant::now();
    let masks = stage("masks", masks_from_assignments(&okm, &map))?;
    timings.masks_ms = ms(start);

    let start = Instant::now();
    let tokens = stage("pooling", TokenSet::pool(&masks, grid, cfg.normalization))?;
    timings.pooling_ms = ms(start);

    let start = Instant::now();
    let identity;
    let proj = match projection {
        Some(p) => p,
        None => {
            identity = ProjectionMatrix::identity(grid.d);
            &identity
        }
    };
    let projected = stage("projection", assemble_tokens(&tokens, proj))?;
    timings.projection_ms = ms(start);

    let report = RunReport {
        k: cfg.k,
        v: cfg.v,
        seed: cfg.seed,
        frames: map.frames,
        height: map.height,
        width: map.width,
        superpixels: map.count,
        okm_iterations: okm.iterations_run,
        okm_converged: okm.converged,
        empty_clusters: tokens.mgs_empty.iter().filter(|&&e| e).count(),
        grid: [grid.t, grid.h, grid.w, grid.d],
        tokens: [projected.rows, projected.cols],
        timings,
    };
    Ok(TokenizeOutput {
        projected,
        tokens,
        masks,
        map,
        okm,
        report,
    })
}

/// File names written by [`write_artifacts`], tensor files first.
pub const ARTIFACTS: [&str; 7] = [
    "tokens.vten",
    "spatial.vten",
    "temporal.vten",
    "mgs.vten",
    "mgs_empty.vten",
    "masks.vten",
    "report.json",
];

fn bool_tensor(flags: &[bool]) -> TensorFile {
    TensorFile::from_u8(vec![flags.len()], flags.iter().map(|&b| b as u8).collect()).expect("shape by construction")
}

/// Writes every entry of [`ARTIFACTS`] into `dir`, creating it if needed.
pub fn write_artifacts(out: &TokenizeOutput, dir: impl AsRef<Path>) -> Result<()> {
    let dir = dir.as_ref();
    std::fs::create_dir_all(dir)?;
    write_tensor(&out.projected.to_tensor(), dir.join(ARTIFACTS[0]))?;
    write_tensor(&out.tokens.spatial.to_tensor(), dir.join(ARTIFACTS[1]))?;
    write_tensor(&out.tokens.temporal.to_tensor(), dir.join(ARTIFACTS[2]))?;
    write_tensor(&out.tokens.mgs.to_tensor(), dir.join(ARTIFACTS[3]))?;
    write_tensor(&bool_tensor(&out.tokens.mgs_empty), dir.join(ARTIFACTS[4]))?;
    write_tensor(&out.masks.to_tensor(), dir.join(ARTIFACTS[5]))?;
    std::fs::write(dir.join(ARTIFACTS[6]), serde_json::to_vec_pretty(&out.report)?)?;
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub k: usize,
    pub v: usize,
    /// Set when the pair was not run.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub skipped: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub stats: Option<SweepStats>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepStats {
    /// Mean number of masks covering a pixel.
    pub mean_multiplicity: f64,
    pub min_multiplicity: usize,
    pub max_multiplicity: usize,
    /// Shannon entropy, in bits, of the mask pixel counts.
    pub cluster_size_entropy: f64,
    pub empty_clusters: usize,
    pub okm_iterations: usize,
    pub runtime_ms: f64,
}

/// Entropy in bits of the distribution proportional to `sizes`.
pub fn size_entropy(sizes: &[usize]) -> f64 {
    let total: usize = sizes.iter().sum();
    if total == 0 {
        return 0.0;
    }
    sizes
        .iter()
        .filter(|&&s| s > 0)
        .map(|&s| {
            let p = s as f64 / total as f64;
            -p * p.log2()
        })
        .sum()
}

fn sweep_stats(out: &TokenizeOutput, runtime_ms: f64) -> SweepStats {
    let masks = &out.masks;
    let n = masks.pixels();
    let (mut lo, mut hi, mut sum) = (usize::MAX, 0, 0usize);
    for p in 0..n {
        let m = masks.multiplicity(p);
        lo = lo.min(m);
        hi = hi.max(m);
        sum += m;
    }
    SweepStats {
        mean_multiplicity: sum as f64 / n as f64,
        min_multiplicity: lo,
        max_multiplicity: hi,
        cluster_size_entropy: size_entropy(&masks.coverage()),
        empty_clusters: out.report.empty_clusters,
        okm_iterations: out.okm.iterations_run,
        runtime_ms,
    }
}

/// Tokenizes `video` for every `(k, v)` in `ks × vs`, `k` outer. Pairs with
/// `v > k` are reported as skipped. Superpixels do not depend on `k` or `v`
/// and are computed once.
pub fn sweep(
    video: &VideoTensor,
    grid: Option<FeatureGrid>,
    base: &PipelineConfig,
    ks: &[usize],
    vs: &[usize],
) -> Result<Vec<SweepRow>> {
    if ks.is_empty() || vs.is_empty() {
        return Err(Error::arg("sweep needs at least one k and one v"));
    }
    stage("config", check_config(base))?;
    let grid = match grid {
        Some(g) => g,
        None => {
            let (t, h, w) = base.grid;
            stage("encoder", toy_encode(video, t, h, w))?
        }
    };
    let (map, features) = stage("superpixels", compute_superpixels(video, &base.superpixel))?;
    let mut rows = Vec::with_capacity(ks.len() * vs.len());
    for &k in ks {
        for &v in vs {
            let skipped = if v > k {
                Some("v>k".to_string())
            } else if v == 0 {
                Some("v=0".to_string())
            } else if k > map.count {
                Some(format!("k>{} superpixels", map.count))
            } else {
                None
            };
            if let Some(note) = skipped {
                tracing::info!(k, v, "skipped: {note}");
                rows.push(SweepRow {
                    k,
                    v,
                    skipped: Some(note),
                    stats: None,
                });
                continue;
            }
            let cfg = PipelineConfig { k, v, ..base.clone() };
            let start = Instant::now();
            let out = run_from_superpixels(map.clone(), &features, &grid, None, &cfg)?;
            let stats = sweep_stats(&out, ms(start));
            rows.push(SweepRow {
                k,
                v,
                skipped: None,
                stats: Some(stats),
            });
        }
    }
    Ok(rows)
}
