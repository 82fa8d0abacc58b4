//! Dataset curation for object-level video editing: mask/object/description
//! triples, the small-mask filter, and the per-task input/output pairings
//! derived from each triple. Manifests are JSON lines.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::layout::{boxes_from_mask_video, interpolate_boxes, rasterize_boxes};
use crate::media::MaskVideo;
use crate::tensor::read_tensor;

/// Minimum mask area fraction kept by default.
pub const DEFAULT_MIN_MASK_FRACTION: f64 = 0.01;

pub const DEFAULT_BACKGROUND_PROMPT: &str = "background";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TripleRecord {
    pub video_id: String,
    /// Original video.
    pub original_path: PathBuf,
    /// Video with the object removed and filled with background.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub inpainted_path: Option<PathBuf>,
    pub mask_path: PathBuf,
    pub object_name: String,
    pub description: String,
    #[serde(default)]
    pub mask_area_fraction: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Task {
    Add,
    Remove,
    Change,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TaskRecord {
    pub task: Task,
    pub input_video: PathBuf,
    pub condition_mask: PathBuf,
    pub prompt: String,
    pub target_video: PathBuf,
}

/// Set pixels over `F·H·W`.
pub fn mask_area_fraction(mask: &MaskVideo) -> f64 {
    mask.count_set() as f64 / mask.data.len() as f64
}

/// Keeps records whose fraction is at least `threshold`, in order.
pub fn filter_small_masks(records: Vec<TripleRecord>, threshold: f64) -> Vec<TripleRecord> {
    records
        .into_iter()
        .filter(|r| r.mask_area_fraction >= threshold)
        .collect()
}

fn resolve(base: &Path, p: &Path) -> PathBuf {
    if p.is_absolute() {
        p.to_path_buf()
    } else {
        base.join(p)
    }
}

/// Reads a VTEN mask, relative paths resolved against `base`.
pub fn load_mask(base: &Path, path: &Path) -> Result<MaskVideo> {
    MaskVideo::from_tensor(&read_tensor(resolve(base, path))?)
}

/// Recomputes `mask_area_fraction` of every record from its mask file.
pub fn populate_fractions(records: &mut [TripleRecord], base: &Path) -> Result<()> {
    for r in records {
        let mask = load_mask(base, &r.mask_path).map_err(|e| Error::Record(format!("{}: {e}", r.video_id)))?;
        r.mask_area_fraction = mask_area_fraction(&mask);
    }
    Ok(())
}

#[derive(Debug, Clone)]
pub struct TaskOptions {
    pub background_prompt: String,
    /// Directory for the box masks used as the addition-task condition.
    /// Defaults to the directory of the segmentation mask.
    pub box_mask_dir: Option<PathBuf>,
}

impl Default for TaskOptions {
    fn default() -> Self {
        Self {
            background_prompt: DEFAULT_BACKGROUND_PROMPT.to_string(),
            box_mask_dir: None,
        }
    }
}

/// Where the addition-task box mask of `t` is expected.
pub fn box_mask_path(t: &TripleRecord, opts: &TaskOptions) -> PathBuf {
    let stem = t
        .mask_path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| t.video_id.clone());
    let name = format!("{stem}.boxes.vten");
    match &opts.box_mask_dir {
        Some(dir) => dir.join(name),
        None => t.mask_path.with_file_name(name),
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct TaskBuild {
    pub records: Vec<TaskRecord>,
    pub warnings: Vec<String>,
}

/// Editing-task pairings of one triple:
///
/// | task   | input     | condition mask      | prompt        | target    |
/// |--------|-----------|---------------------|---------------|-----------|
/// | ADD    | inpainted | box mask of object  | description   | original  |
/// | REMOVE | original  | segmentation mask   | background    | inpainted |
/// | CHANGE | original  | segmentation mask   | description   | original  |
///
/// Tasks that need the inpainted video are skipped, with a warning, when it
/// is missing.
pub fn build_task_records(t: &TripleRecord, opts: &TaskOptions) -> Result<TaskBuild> {
    if t.mask_path.as_os_str().is_empty() {
        return Err(Error::Record(format!("{}: missing mask path", t.video_id)));
    }
    if t.original_path.as_os_str().is_empty() {
        return Err(Error::Record(format!("{}: missing original video path", t.video_id)));
    }
    let mut out = TaskBuild::default();
    match t.inpainted_path.as_ref().filter(|p| !p.as_os_str().is_empty()) {
        Some(inpainted) => {
            out.records.push(TaskRecord {
                task: Task::Add,
                input_video: inpainted.clone(),
                condition_mask: box_mask_path(t, opts),
                prompt: t.description.clone(),
                target_video: t.original_path.clone(),
            });
            out.records.push(TaskRecord {
                task: Task::Remove,
                input_video: t.original_path.clone(),
                condition_mask: t.mask_path.clone(),
                prompt: opts.background_prompt.clone(),
                target_video: inpainted.clone(),
            });
        }
        None => {
            for task in ["ADD", "REMOVE"] {
                let msg = format!("{}: no inpainted video, skipping {task}", t.video_id);
                tracing::warn!("{msg}");
                out.warnings.push(msg);
            }
        }
    }
    out.records.push(TaskRecord {
        task: Task::Change,
        input_video: t.original_path.clone(),
        condition_mask: t.mask_path.clone(),
        prompt: t.description.clone(),
        target_video: t.original_path.clone(),
    });
    Ok(out)
}

/// Box-shaped condition mask for the addition task: per-frame boxes of the
/// segmentation mask, gaps interpolated, rasterized at the mask size.
pub fn box_condition_mask(segmentation: &MaskVideo, object_name: &str) -> Result<MaskVideo> {
    let boxes = interpolate_boxes(&boxes_from_mask_video(segmentation, object_name)?)?;
    rasterize_boxes(&boxes, segmentation.height, segmentation.width)
}

pub fn write_manifest<T: Serialize>(records: &[T], path: impl AsRef<Path>) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    for r in records {
        serde_json::to_writer(&mut w, r)?;
        w.write_all(b"\n")?;
    }
    w.flush()?;
    Ok(())
}

/// Reads one record per non-blank line. Errors carry the 1-based line
/// number.
pub fn read_manifest<T: DeserializeOwned>(path: impl AsRef<Path>) -> Result<Vec<T>> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::NotFound(format!("{}: {e}", path.display())))?;
    let mut out = Vec::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let rec = serde_json::from_str(&line).map_err(|e| Error::Manifest {
            path: path.to_path_buf(),
            line: i + 1,
            msg: e.to_string(),
        })?;
        out.push(rec);
    }
    Ok(out)
}
