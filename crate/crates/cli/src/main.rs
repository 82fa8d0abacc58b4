mod config;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::json;

use mgspool::curation::{
    box_condition_mask, box_mask_path, build_task_records, filter_small_masks, load_mask, populate_fractions,
    read_manifest, write_manifest, TaskOptions, TripleRecord, DEFAULT_BACKGROUND_PROMPT, DEFAULT_MIN_MASK_FRACTION,
};
use mgspool::layout::{
    boxes_from_mask_video, interpolate_boxes, parse_layout, rasterize_boxes, sequence_iou, serialize_layout,
    BoxSequence,
};
use mgspool::media::{
    build_superimage, load_frame_sequence, save_frame, save_frame_sequence, synthetic_video, DEFAULT_FRAME_PATTERN,
};
use mgspool::metrics::{masked_ssim_per_frame, psnr_per_frame, ssim_per_frame, MetricReport, RoiHandling, SsimConfig};
use mgspool::okm::{masks_from_assignments, okm_cluster};
use mgspool::pipeline::{sweep, tokenize_with, write_artifacts, PipelineConfig, SweepRow, SWEEP_K, SWEEP_V};
use mgspool::pooling::{FeatureGrid, MgsNormalization, ProjectionMatrix};
use mgspool::superpixels::{compute_superpixels, load_precomputed_map, ColorSpace};
use mgspool::tensor::{read_tensor, write_tensor};
use mgspool::{MaskVideo, Matrix, VideoTensor};

#[derive(Parser)]
#[command(
    name = "mgspool",
    version,
    about = "Video superpixel clustering, token pooling, layouts and edit metrics"
)]
struct Cli {
    /// Print machine-readable JSON on stdout.
    #[arg(long, global = true)]
    json: bool,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the full pipeline on a video and write token artifacts.
    Tokenize(TokenizeArgs),
    /// Tokenize for every (k, v) pair and report structural statistics.
    Sweep(SweepArgs),
    /// Compute superpixels and their mean features.
    Superpixels(SuperpixelArgs),
    /// Overlapping k-means on a feature matrix.
    Okm(OkmArgs),
    /// Parse, derive, compare and rasterize object layout plans.
    #[command(subcommand)]
    Layout(LayoutCommand),
    /// PSNR, SSIM and SSIM outside a region of interest.
    #[command(subcommand)]
    Metrics(MetricsCommand),
    /// Filter editing-dataset manifests and expand them into task records.
    #[command(subcommand)]
    Curate(CurateCommand),
    /// Tile sampled frames into one numbered grid image.
    Superimage(SuperimageArgs),
    /// Write a synthetic test clip as a frame directory.
    Synth(SynthArgs),
}

#[derive(Args, Clone)]
struct VideoInput {
    /// Frame directory, or a `.vten` tensor shaped F×C×H×W.
    video: PathBuf,
    /// File name pattern of the frames.
    #[arg(long, default_value = DEFAULT_FRAME_PATTERN)]
    pattern: String,
}

#[derive(Args)]
struct PipelineArgs {
    /// TOML file with pipeline settings; flags take precedence.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    k: Option<usize>,
    #[arg(long)]
    v: Option<usize>,
    /// Superpixel regions per frame.
    #[arg(long)]
    regions: Option<usize>,
    #[arg(long)]
    compactness: Option<f64>,
    #[arg(long)]
    color_space: Option<ColorArg>,
    /// Token grid of the built-in encoder as t,h,w.
    #[arg(long, value_parser = parse_grid)]
    grid: Option<(usize, usize, usize)>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    max_iter: Option<usize>,
    /// Use bare mask-weighted sums instead of weighted means.
    #[arg(long)]
    unnormalized: bool,
    /// Encoder features shaped t×h×w×d instead of the built-in encoder.
    #[arg(long)]
    encoder_features: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum ColorArg {
    Rgb,
    Lab,
}

impl From<ColorArg> for ColorSpace {
    fn from(c: ColorArg) -> Self {
        match c {
            ColorArg::Rgb => ColorSpace::Rgb,
            ColorArg::Lab => ColorSpace::Lab,
        }
    }
}

fn parse_grid(s: &str) -> Result<(usize, usize, usize), String> {
    let parts: Vec<usize> = s
        .split(',')
        .map(|p| p.trim().parse::<usize>().map_err(|e| format!("{p:?}: {e}")))
        .collect::<Result<_, _>>()?;
    match parts[..] {
        [t, h, w] => Ok((t, h, w)),
        _ => Err(format!("expected t,h,w, got {s:?}")),
    }
}

impl PipelineArgs {
    fn resolve(&self) -> Result<PipelineConfig> {
        let (mut cfg, file_seed) = config::load(self.config.as_deref())?;
        let env = std::env::var(config::SEED_ENV).ok();
        cfg.seed = config::resolve_seed(self.seed, file_seed.then_some(cfg.seed), env.as_deref())?;
        if let Some(k) = self.k {
            cfg.k = k;
        }
        if let Some(v) = self.v {
            cfg.v = v;
        }
        if let Some(r) = self.regions {
            cfg.superpixel.regions_per_frame = r;
        }
        if let Some(m) = self.compactness {
            cfg.superpixel.compactness = m;
        }
        if let Some(c) = self.color_space {
            cfg.superpixel.color_space = c.into();
        }
        if let Some(g) = self.grid {
            cfg.grid = g;
        }
        if let Some(n) = self.max_iter {
            cfg.max_iter = n;
        }
        if self.unnormalized {
            cfg.normalization = MgsNormalization::Unnormalized;
        }
        Ok(cfg)
    }

    fn feature_grid(&self) -> Result<Option<FeatureGrid>> {
        self.encoder_features
            .as_deref()
            .map(|p| -> Result<FeatureGrid> {
                FeatureGrid::from_tensor(&read_tensor(p)?).with_context(|| p.display().to_string())
            })
            .transpose()
    }
}

#[derive(Args)]
struct TokenizeArgs {
    #[command(flatten)]
    input: VideoInput,
    #[command(flatten)]
    pipeline: PipelineArgs,
    /// Projection matrix shaped d×d′; identity when absent.
    #[arg(long)]
    projection: Option<PathBuf>,
    /// Output directory.
    #[arg(long, short)]
    out: PathBuf,
}

#[derive(Args)]
struct SweepArgs {
    #[command(flatten)]
    input: VideoInput,
    #[command(flatten)]
    pipeline: PipelineArgs,
    /// Comma-separated k values.
    #[arg(long, value_delimiter = ',')]
    k_list: Option<Vec<usize>>,
    /// Comma-separated v values.
    #[arg(long, value_delimiter = ',')]
    v_list: Option<Vec<usize>>,
}

#[derive(Args)]
struct SuperpixelArgs {
    #[command(flatten)]
    input: VideoInput,
    #[command(flatten)]
    pipeline: PipelineArgs,
    /// Label map output, F×H×W.
    #[arg(long)]
    map_out: PathBuf,
    /// Mean feature output, one row per superpixel.
    #[arg(long)]
    features_out: Option<PathBuf>,
}

#[derive(Args)]
struct OkmArgs {
    /// Feature matrix, one row per point.
    features: PathBuf,
    #[command(flatten)]
    pipeline: PipelineArgs,
    #[arg(long)]
    assignments_out: Option<PathBuf>,
    #[arg(long)]
    centroids_out: Option<PathBuf>,
    /// Superpixel label map matching the feature rows; with --masks-out
    /// writes the k cluster masks.
    #[arg(long, requires = "masks_out")]
    map: Option<PathBuf>,
    #[arg(long, requires = "map")]
    masks_out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum LayoutCommand {
    /// Parse a layout string and print its boxes.
    Parse {
        /// Layout text, or @path to read it from a file.
        text: String,
    },
    /// Derive a layout from a binary mask video (F×H×W).
    Gen {
        mask: PathBuf,
        #[arg(long)]
        object: String,
        #[arg(long, default_value_t = 2)]
        decimals: usize,
    },
    /// Mean IoU over frames present in both layouts.
    Iou { a: String, b: String },
    /// Rasterize a layout into a binary mask video.
    Rasterize {
        text: String,
        #[arg(long)]
        height: usize,
        #[arg(long)]
        width: usize,
        /// Pad the plan to this many frames.
        #[arg(long)]
        frames: Option<usize>,
        /// Fill frames without a box from their neighbours.
        #[arg(long)]
        interpolate: bool,
        #[arg(long, short)]
        out: PathBuf,
    },
}

#[derive(Args)]
struct PairArgs {
    a: PathBuf,
    b: PathBuf,
    #[arg(long, default_value = DEFAULT_FRAME_PATTERN)]
    pattern: String,
}

#[derive(Subcommand)]
enum MetricsCommand {
    Psnr(PairArgs),
    Ssim(PairArgs),
    /// SSIM outside a region of interest.
    MaskedSsim {
        #[command(flatten)]
        pair: PairArgs,
        /// Region-of-interest mask, F×H×W.
        #[arg(long)]
        roi: PathBuf,
        /// Score only windows clear of the region instead of zero-filling it.
        #[arg(long)]
        exclude_windows: bool,
    },
}

#[derive(Subcommand)]
enum CurateCommand {
    /// Drop records whose mask covers less than the threshold.
    Filter {
        manifest: PathBuf,
        #[arg(long, default_value_t = DEFAULT_MIN_MASK_FRACTION)]
        threshold: f64,
        /// Use the fractions stored in the manifest instead of reading masks.
        #[arg(long)]
        no_recompute: bool,
        /// Directory that relative mask paths are resolved against; defaults
        /// to the manifest's directory.
        #[arg(long)]
        base: Option<PathBuf>,
        #[arg(long, short)]
        out: PathBuf,
    },
    /// Expand triples into add/remove/change task records.
    Tasks {
        manifest: PathBuf,
        #[arg(long, default_value = DEFAULT_BACKGROUND_PROMPT)]
        background_prompt: String,
        #[arg(long)]
        box_mask_dir: Option<PathBuf>,
        /// Also write the box masks used by the add task.
        #[arg(long)]
        write_box_masks: bool,
        #[arg(long)]
        base: Option<PathBuf>,
        #[arg(long, short)]
        out: PathBuf,
    },
}

#[derive(Args)]
struct SuperimageArgs {
    #[command(flatten)]
    input: VideoInput,
    #[arg(long, default_value_t = 8)]
    samples: usize,
    #[arg(long, default_value_t = 4)]
    cols: usize,
    /// Output image (.png or .ppm).
    #[arg(long, short)]
    out: PathBuf,
}

#[derive(Args)]
struct SynthArgs {
    #[arg(long, default_value_t = 16)]
    frames: usize,
    #[arg(long, default_value_t = 64)]
    height: usize,
    #[arg(long, default_value_t = 64)]
    width: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value = DEFAULT_FRAME_PATTERN)]
    pattern: String,
    #[arg(long, short)]
    out: PathBuf,
}

fn load_video(path: &Path, pattern: &str) -> Result<VideoTensor> {
    let v = if path.is_file() {
        VideoTensor::from_tensor(&read_tensor(path)?)
    } else {
        load_frame_sequence(path, pattern)
    };
    v.with_context(|| format!("loading video {}", path.display()))
}

fn read_text(arg: &str) -> Result<String> {
    match arg.strip_prefix('@') {
        Some(p) => std::fs::read_to_string(p).with_context(|| format!("reading {p}")),
        None => Ok(arg.to_string()),
    }
}

fn manifest_base(manifest: &Path, base: Option<PathBuf>) -> PathBuf {
    base.unwrap_or_else(|| manifest.parent().map(Path::to_path_buf).unwrap_or_default())
}

/// Prints `value` as JSON with --json, otherwise the human rendering.
fn emit<T: Serialize>(json: bool, value: &T, human: impl FnOnce() -> String) -> Result<()> {
    if json {
        println!("{}", serde_json::to_string(value)?);
    } else {
        println!("{}", human());
    }
    Ok(())
}

fn cmd_tokenize(a: TokenizeArgs, json: bool) -> Result<()> {
    let cfg = a.pipeline.resolve()?;
    let video = load_video(&a.input.video, &a.input.pattern)?;
    let proj = a
        .projection
        .as_deref()
        .map(|p| -> Result<ProjectionMatrix> { Ok(ProjectionMatrix::new(Matrix::from_tensor(&read_tensor(p)?)?)?) })
        .transpose()?;
    let out = tokenize_with(&video, a.pipeline.feature_grid()?, proj.as_ref(), &cfg)?;
    write_artifacts(&out, &a.out)?;
    let r = &out.report;
    tracing::info!(k = r.k, v = r.v, seed = r.seed, "wrote {}", a.out.display());
    emit(json, r, || {
        format!(
            "tokens {}x{} (k={}, v={}, seed={}), {} superpixels, {} empty clusters, {:.1} ms -> {}",
            r.tokens[0],
            r.tokens[1],
            r.k,
            r.v,
            r.seed,
            r.superpixels,
            r.empty_clusters,
            r.timings.total_ms,
            a.out.display()
        )
    })
}

fn sweep_table(rows: &[SweepRow]) -> String {
    let mut s = format!(
        "{:>4} {:>4} {:>10} {:>9} {:>6} {:>6} {:>10}\n",
        "k", "v", "mean mult", "entropy", "empty", "iters", "ms"
    );
    for r in rows {
        match (&r.stats, &r.skipped) {
            (Some(st), _) => {
                s += &format!(
                    "{:>4} {:>4} {:>10.3} {:>9.4} {:>6} {:>6} {:>10.1}\n",
                    r.k,
                    r.v,
                    st.mean_multiplicity,
                    st.cluster_size_entropy,
                    st.empty_clusters,
                    st.okm_iterations,
                    st.runtime_ms
                )
            }
            (None, note) => s += &format!("{:>4} {:>4}  skipped: {}\n", r.k, r.v, note.as_deref().unwrap_or("")),
        }
    }
    s.trim_end().to_string()
}

fn cmd_sweep(a: SweepArgs, json: bool) -> Result<()> {
    let cfg = a.pipeline.resolve()?;
    let video = load_video(&a.input.video, &a.input.pattern)?;
    let ks = a.k_list.unwrap_or_else(|| SWEEP_K.to_vec());
    let vs = a.v_list.unwrap_or_else(|| SWEEP_V.to_vec());
    let rows = sweep(&video, a.pipeline.feature_grid()?, &cfg, &ks, &vs)?;
    emit(json, &rows, || sweep_table(&rows))
}

fn cmd_superpixels(a: SuperpixelArgs, json: bool) -> Result<()> {
    let cfg = a.pipeline.resolve()?;
    let video = load_video(&a.input.video, &a.input.pattern)?;
    let (map, feats) = compute_superpixels(&video, &cfg.superpixel)?;
    write_tensor(&map.to_tensor(), &a.map_out)?;
    if let Some(p) = &a.features_out {
        write_tensor(&feats.to_tensor(), p)?;
    }
    let per_frame: Vec<usize> = (0..map.frames).map(|f| map.superpixels_in_frame(f)).collect();
    let value = json!({ "superpixels": map.count, "per_frame": per_frame, "feature_dim": feats.cols });
    emit(json, &value, || {
        format!("{} superpixels ({} features each)", map.count, feats.cols)
    })
}

fn cmd_okm(a: OkmArgs, json: bool) -> Result<()> {
    let cfg = a.pipeline.resolve()?;
    let feats = Matrix::from_tensor(&read_tensor(&a.features)?).context("reading features")?;
    let res = okm_cluster(&feats, cfg.k, cfg.v, cfg.max_iter, cfg.seed)?;
    if let Some(p) = &a.assignments_out {
        write_tensor(&res.assignments_tensor(), p)?;
    }
    if let Some(p) = &a.centroids_out {
        write_tensor(&res.centroids_tensor(), p)?;
    }
    if let (Some(map), Some(out)) = (&a.map, &a.masks_out) {
        let map = load_precomputed_map(map)?;
        write_tensor(&masks_from_assignments(&res, &map)?.to_tensor(), out)?;
    }
    let value = json!({
        "k": res.k,
        "v": res.v,
        "points": res.points(),
        "iterations": res.iterations_run,
        "converged": res.converged,
        "cluster_sizes": res.cluster_sizes(),
    });
    emit(json, &value, || {
        format!(
            "{} points into k={} (v={}), {} iterations, converged: {}",
            res.points(),
            res.k,
            res.v,
            res.iterations_run,
            res.converged
        )
    })
}

fn boxes_text(seq: &BoxSequence) -> String {
    let mut s = format!("object: {}", seq.object_name);
    for (i, b) in seq.boxes.iter().enumerate() {
        if let Some(b) = b {
            let [x1, y1, x2, y2] = b.coords();
            s += &format!("\nframe {}: [{x1:?}, {y1:?}, {x2:?}, {y2:?}]", i + 1);
        }
    }
    s
}

fn cmd_layout(c: LayoutCommand, json: bool) -> Result<()> {
    match c {
        LayoutCommand::Parse { text } => {
            let seq = parse_layout(&read_text(&text)?)?;
            emit(json, &seq, || boxes_text(&seq))
        }
        LayoutCommand::Gen { mask, object, decimals } => {
            let mask = MaskVideo::from_tensor(&read_tensor(&mask)?)?;
            let seq = boxes_from_mask_video(&mask, &object)?;
            let text = serialize_layout(&seq, decimals)?;
            emit(json, &json!({ "layout": text, "plan": seq }), || text.clone())
        }
        LayoutCommand::Iou { a, b } => {
            let a = parse_layout(&read_text(&a)?).context("first layout")?;
            let b = parse_layout(&read_text(&b)?).context("second layout")?;
            let v = sequence_iou(&a, &b)?;
            emit(json, &json!({ "iou": v }), || format!("{v}"))
        }
        LayoutCommand::Rasterize {
            text,
            height,
            width,
            frames,
            interpolate,
            out,
        } => {
            let mut seq = parse_layout(&read_text(&text)?)?;
            if let Some(n) = frames {
                if n < seq.frame_count() {
                    bail!("layout has {} frames, more than --frames {n}", seq.frame_count());
                }
                seq.boxes.resize(n, None);
            }
            if interpolate {
                seq = interpolate_boxes(&seq)?;
            }
            let mask = rasterize_boxes(&seq, height, width)?;
            write_tensor(&mask.to_tensor(), &out)?;
            let value =
                json!({ "frames": mask.frames, "height": height, "width": width, "pixels_set": mask.count_set() });
            emit(json, &value, || {
                format!(
                    "{} frames, {} pixels set -> {}",
                    mask.frames,
                    mask.count_set(),
                    out.display()
                )
            })
        }
    }
}

fn report_text(r: &MetricReport) -> String {
    let frames: Vec<String> = r.per_frame.iter().map(|v| format!("{v:.4}")).collect();
    format!("{} mean {:.6} (frames: {})", r.metric, r.mean, frames.join(" "))
}

fn cmd_metrics(c: MetricsCommand, json: bool) -> Result<()> {
    let load = |p: &PairArgs| -> Result<(VideoTensor, VideoTensor)> {
        Ok((load_video(&p.a, &p.pattern)?, load_video(&p.b, &p.pattern)?))
    };
    let report = match c {
        MetricsCommand::Psnr(p) => {
            let (a, b) = load(&p)?;
            MetricReport::new("psnr", psnr_per_frame(&a, &b, 1.0)?)?
        }
        MetricsCommand::Ssim(p) => {
            let (a, b) = load(&p)?;
            MetricReport::new("ssim", ssim_per_frame(&a, &b, &SsimConfig::default())?)?
        }
        MetricsCommand::MaskedSsim {
            pair,
            roi,
            exclude_windows,
        } => {
            let (a, b) = load(&pair)?;
            let roi = MaskVideo::from_tensor(&read_tensor(&roi)?).context("reading roi mask")?;
            let handling = if exclude_windows {
                RoiHandling::ExcludeWindows
            } else {
                RoiHandling::ZeroFill
            };
            MetricReport::new(
                "masked_ssim",
                masked_ssim_per_frame(&a, &b, &roi, &SsimConfig::default(), handling)?,
            )?
        }
    };
    emit(json, &report, || report_text(&report))
}

fn cmd_curate(c: CurateCommand, json: bool) -> Result<()> {
    match c {
        CurateCommand::Filter {
            manifest,
            threshold,
            no_recompute,
            base,
            out,
        } => {
            let mut records: Vec<TripleRecord> = read_manifest(&manifest)?;
            if !no_recompute {
                populate_fractions(&mut records, &manifest_base(&manifest, base))?;
            }
            let before = records.len();
            let kept = filter_small_masks(records, threshold);
            write_manifest(&kept, &out)?;
            let value = json!({ "input": before, "kept": kept.len(), "dropped": before - kept.len() });
            emit(json, &value, || {
                format!("kept {} of {before} records -> {}", kept.len(), out.display())
            })
        }
        CurateCommand::Tasks {
            manifest,
            background_prompt,
            box_mask_dir,
            write_box_masks,
            base,
            out,
        } => {
            let records: Vec<TripleRecord> = read_manifest(&manifest)?;
            let base = manifest_base(&manifest, base);
            let opts = TaskOptions {
                background_prompt,
                box_mask_dir,
            };
            let mut tasks = Vec::new();
            let mut warnings = Vec::new();
            let mut box_masks = 0;
            for r in &records {
                let built = build_task_records(r, &opts)?;
                if write_box_masks && r.inpainted_path.is_some() {
                    let seg = load_mask(&base, &r.mask_path)?;
                    let boxes = box_condition_mask(&seg, &r.object_name)
                        .with_context(|| format!("box mask for {}", r.video_id))?;
                    let path = box_mask_path(r, &opts);
                    let path = if path.is_absolute() { path } else { base.join(path) };
                    if let Some(dir) = path.parent() {
                        std::fs::create_dir_all(dir)?;
                    }
                    write_tensor(&boxes.to_tensor(), &path)?;
                    box_masks += 1;
                }
                tasks.extend(built.records);
                warnings.extend(built.warnings);
            }
            write_manifest(&tasks, &out)?;
            let value =
                json!({ "triples": records.len(), "tasks": tasks.len(), "box_masks": box_masks, "warnings": warnings });
            emit(json, &value, || {
                format!(
                    "{} task records from {} triples -> {}",
                    tasks.len(),
                    records.len(),
                    out.display()
                )
            })
        }
    }
}

fn cmd_superimage(a: SuperimageArgs, json: bool) -> Result<()> {
    let video = load_video(&a.input.video, &a.input.pattern)?;
    let s = build_superimage(&video, a.samples, a.cols)?;
    save_frame(&s.image, &a.out)?;
    let labels: Vec<usize> = s.tiles.iter().map(|t| t.label).collect();
    let value =
        json!({ "rows": s.rows, "cols": s.cols, "height": s.image.height, "width": s.image.width, "frames": labels });
    emit(json, &value, || {
        format!(
            "{}x{} grid of frames {:?} -> {}",
            s.rows,
            s.cols,
            labels,
            a.out.display()
        )
    })
}

fn cmd_synth(a: SynthArgs, json: bool) -> Result<()> {
    let v = synthetic_video(a.frames, a.height, a.width, a.seed);
    save_frame_sequence(&v, &a.out, &a.pattern)?;
    let value = json!({ "frames": a.frames, "height": a.height, "width": a.width, "dir": a.out });
    emit(json, &value, || {
        format!("{} frames of {}x{} -> {}", a.frames, a.height, a.width, a.out.display())
    })
}

fn main() -> ExitCode {
    tracing_subscriber::fmt()
        .with_writer(std::io::stderr)
        .with_env_filter(tracing_subscriber::EnvFilter::try_from_default_env().unwrap_or_else(|_| "warn".into()))
        .init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}

fn run(cli: Cli) -> Result<()> {
    let json = cli.json;
    match cli.command {
        Command::Tokenize(a) => cmd_tokenize(a, json),
        Command::Sweep(a) => cmd_sweep(a, json),
        Command::Superpixels(a) => cmd_superpixels(a, json),
        Command::Okm(a) => cmd_okm(a, json),
        Command::Layout(c) => cmd_layout(c, json),
        Command::Metrics(c) => cmd_metrics(c, json),
        Command::Curate(c) => cmd_curate(c, json),
        Command::Superimage(a) => cmd_superimage(a, json),
        Command::Synth(a) => cmd_synth(a, json),
    }
}
