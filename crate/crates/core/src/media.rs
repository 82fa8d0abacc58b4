//! Video and mask containers, frame-sequence I/O and superimage montages.

use std::fs;
use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::font;
use crate::tensor::{TensorData, TensorFile};

pub const DEFAULT_FRAME_PATTERN: &str = "frame_%04d.ppm";

/// A video as `F×C×H×W` intensities in `[0, 1]`, frame-major and row-major:
/// sample `(f, c, y, x)` lives at `((f·C + c)·H + y)·W + x`.
#[derive(Debug, Clone, PartialEq)]
pub struct VideoTensor {
    pub frames: usize,
    pub channels: usize,
    pub height: usize,
    pub width: usize,
    pub data: Vec<f32>,
}

impl VideoTensor {
    pub fn new(frames: usize, channels: usize, height: usize, width: usize, data: Vec<f32>) -> Result<Self> {
        if frames == 0 || channels == 0 || height == 0 || width == 0 {
            return Err(Error::arg("video dimensions must all be at least 1"));
        }
        if !(channels == 1 || channels == 3) {
            return Err(Error::arg(format!("channels must be 1 or 3, got {channels}")));
        }
        if data.len() != frames * channels * height * width {
            return Err(Error::dims(format!(
                "{frames}x{channels}x{height}x{width} video needs {} values, got {}",
                frames * channels * height * width,
                data.len()
            )));
        }
        if let Some(bad) = data.iter().find(|v| !(0.0..=1.0).contains(*v)) {
            return Err(Error::arg(format!("intensity {bad} outside [0, 1]")));
        }
        Ok(Self {
            frames,
            channels,
            height,
            width,
            data,
        })
    }

    pub fn filled(frames: usize, channels: usize, height: usize, width: usize, value: f32) -> Self {
        Self::new(
            frames,
            channels,
            height,
            width,
            vec![value; frames * channels * height * width],
        )
        .expect("valid constant video")
    }

    #[inline]
    pub fn index(&self, f: usize, c: usize, y: usize, x: usize) -> usize {
        ((f * self.channels + c) * self.height + y) * self.width + x
    }

    #[inline]
    pub fn get(&self, f: usize, c: usize, y: usize, x: usize) -> f32 {
        self.data[self.index(f, c, y, x)]
    }

    pub fn frame_len(&self) -> usize {
        self.channels * self.height * self.width
    }

    pub fn frame_slice(&self, f: usize) -> &[f32] {
        let n = self.frame_len();
        &self.data[f * n..(f + 1) * n]
    }

    pub fn frame(&self, f: usize) -> Frame {
        Frame {
            channels: self.channels,
            height: self.height,
            width: self.width,
            data: self.frame_slice(f).to_vec(),
        }
    }

    pub fn pixels_per_frame(&self) -> usize {
        self.height * self.width
    }

    pub fn to_tensor(&self) -> TensorFile {
        TensorFile::from_f32(
            vec![self.frames, self.channels, self.height, self.width],
            self.data.clone(),
        )
        .expect("video shape is consistent")
    }

    pub fn from_tensor(t: &TensorFile) -> Result<Self> {
        if t.rank() != 4 {
            return Err(Error::format(format!(
                "video tensor must be rank 4 (F,C,H,W), got rank {}",
                t.rank()
            )));
        }
        let d = t.dims();
        let data = match t.data() {
            TensorData::F32(v) => v.clone(),
            TensorData::U8(v) => v.iter().map(|&b| b as f32 / 255.0).collect(),
        };
        Self::new(d[0], d[1], d[2], d[3], data)
    }
}

/// A single image, `C×H×W`.
#[derive(Debug, Clone, PartialEq)]
pub struct Frame {
    pub channels: usize,
    pub height: usize,
    pub width: usize,
    pub data: Vec<f32>,
}

impl Frame {
    pub fn new(channels: usize, height: usize, width: usize, data: Vec<f32>) -> Result<Self> {
        if data.len() != channels * height * width {
            return Err(Error::dims(format!(
                "{channels}x{height}x{width} frame needs {} values, got {}",
                channels * height * width,
                data.len()
            )));
        }
        Ok(Self {
            channels,
            height,
            width,
            data,
        })
    }

    pub fn filled(channels: usize, height: usize, width: usize, value: f32) -> Self {
        Self {
            channels,
            height,
            width,
            data: vec![value; channels * height * width],
        }
    }

    #[inline]
    pub fn get(&self, c: usize, y: usize, x: usize) -> f32 {
        self.data[(c * self.height + y) * self.width + x]
    }

    #[inline]
    pub fn set(&mut self, c: usize, y: usize, x: usize, v: f32) {
        self.data[(c * self.height + y) * self.width + x] = v;
    }

    pub fn plane(&self, c: usize) -> &[f32] {
        let n = self.height * self.width;
        &self.data[c * n..(c + 1) * n]
    }

    pub fn same_shape(&self, other: &Frame) -> bool {
        self.channels == other.channels && self.height == other.height && self.width == other.width
    }

    pub fn into_video(self) -> VideoTensor {
        VideoTensor {
            frames: 1,
            channels: self.channels,
            height: self.height,
            width: self.width,
            data: self.data,
        }
    }
}

/// Binary `F×1×H×W` mask; values are 0 or 1.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MaskVideo {
    pub frames: usize,
    pub height: usize,
    pub width: usize,
    pub data: Vec<u8>,
}

impl MaskVideo {
    pub fn new(frames: usize, height: usize, width: usize, data: Vec<u8>) -> Result<Self> {
        if frames == 0 || height == 0 || width == 0 {
            return Err(Error::arg("mask dimensions must all be at least 1"));
        }
        if data.len() != frames * height * width {
            return Err(Error::dims(format!(
                "{frames}x{height}x{width} mask needs {} values, got {}",
                frames * height * width,
                data.len()
            )));
        }
        if data.iter().any(|&b| b > 1) {
            return Err(Error::arg("mask values must be 0 or 1"));
        }
        Ok(Self {
            frames,
            height,
            width,
            data,
        })
    }

    pub fn zeros(frames: usize, height: usize, width: usize) -> Self {
        Self {
            frames,
            height,
            width,
            data: vec![0; frames * height * width],
        }
    }

    pub fn ones(frames: usize, height: usize, width: usize) -> Self {
        Self {
            frames,
            height,
            width,
            data: vec![1; frames * height * width],
        }
    }

    #[inline]
    pub fn get(&self, f: usize, y: usize, x: usize) -> u8 {
        self.data[(f * self.height + y) * self.width + x]
    }

    #[inline]
    pub fn set(&mut self, f: usize, y: usize, x: usize, v: u8) {
        self.data[(f * self.height + y) * self.width + x] = v;
    }

    pub fn frame_slice(&self, f: usize) -> &[u8] {
        let n = self.height * self.width;
        &self.data[f * n..(f + 1) * n]
    }

    pub fn count_set(&self) -> usize {
        self.data.iter().filter(|&&b| b != 0).count()
    }

    /// Rank-3 `(F, H, W)` u8 tensor.
    pub fn to_tensor(&self) -> TensorFile {
        TensorFile::from_u8(vec![self.frames, self.height, self.width], self.data.clone())
            .expect("mask shape is consistent")
    }

    /// Accepts rank 3 `(F,H,W)` or rank 4 `(F,1,H,W)`; any nonzero value is
    /// treated as set.
    pub fn from_tensor(t: &TensorFile) -> Result<Self> {
        let (f, h, w) = match t.dims() {
            [f, h, w] => (*f, *h, *w),
            [f, 1, h, w] => (*f, *h, *w),
            other => {
                return Err(Error::format(format!(
                    "mask tensor must be (F,H,W) or (F,1,H,W), got {other:?}"
                )))
            }
        };
        let data = (0..t.data().len())
            .map(|i| u8::from(t.data().get_f64(i) != 0.0))
            .collect();
        Self::new(f, h, w, data)
    }
}

/// A parsed `prefix%0Nd suffix` filename template.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FrameTemplate {
    prefix: String,
    width: usize,
    suffix: String,
}

impl FrameTemplate {
    pub fn parse(pattern: &str) -> Result<Self> {
        let start = pattern
            .find('%')
            .ok_or_else(|| Error::arg(format!("template {pattern:?} has no %d field")))?;
        let rest = &pattern[start + 1..];
        let end = rest
            .find('d')
            .ok_or_else(|| Error::arg(format!("template {pattern:?} has no %d field")))?;
        let digits = &rest[..end];
        let width = if digits.is_empty() {
            0
        } else {
            digits.parse::<usize>()
                .map_err(|_| Error::arg(format!("bad width {digits:?} in template {pattern:?}")))?
        };
        Ok(Self {
            prefix: pattern[..start].to_string(),
            width,
            suffix: rest[end + 1..].to_string(),
        })
    }

    pub fn render(&self, index: usize) -> String {
        format!("{}{:0width$}{}", self.prefix, index, self.suffix, width = self.width)
    }

    pub fn match_index(&self, name: &str) -> Option<usize> {
        let digits = name.strip_prefix(&self.prefix)?.strip_suffix(&self.suffix)?;
        if digits.is_empty() || digits.len() < self.width || !digits.bytes().all(|b| b.is_ascii_digit()) {
            return None;
        }
        digits.parse().ok()
    }
}

struct DecodedFrame {
    channels: usize,
    height: usize,
    width: usize,
    data: Vec<f32>,
}

fn decode_frame(path: &Path) -> Result<DecodedFrame> {
    let img = image::ImageReader::open(path)?.with_guessed_format()?.decode()?;
    let gray = img.color().channel_count() <= 2;
    let (w, h) = (img.width() as usize, img.height() as usize);
    let (channels, interleaved) = if gray {
        (1, img.to_luma8().into_raw())
    } else {
        (3, img.to_rgb8().into_raw())
    };
    // interleaved HWC -> planar CHW
    let mut data = vec![0f32; channels * h * w];
    for (i, px) in interleaved.chunks_exact(channels).enumerate() {
        for (c, &v) in px.iter().enumerate() {
            data[c * h * w + i] = v as f32 / 255.0;
        }
    }
    Ok(DecodedFrame {
        channels,
        height: h,
        width: w,
        data,
    })
}

/// Loads all files in `dir` matching `pattern` (e.g. `frame_%04d.ppm`),
/// ordered by frame index. Indices must be consecutive.
pub fn load_frame_sequence(dir: impl AsRef<Path>, pattern: &str) -> Result<VideoTensor> {
    let dir = dir.as_ref();
    let template = FrameTemplate::parse(pattern)?;
    let entries = fs::read_dir(dir).map_err(|e| Error::NotFound(format!("{}: {e}", dir.display())))?;
    let mut found: Vec<(usize, PathBuf)> = Vec::new();
    for entry in entries {
        let entry = entry?;
        let name = entry.file_name();
        if let Some(idx) = name.to_str().and_then(|n| template.match_index(n)) {
            found.push((idx, entry.path()));
        }
    }
    if found.is_empty() {
        return Err(Error::NotFound(format!(
            "no files matching {pattern:?} in {}",
            dir.display()
        )));
    }
    found.sort();
    for pair in found.windows(2) {
        if pair[1].0 == pair[0].0 {
            return Err(Error::dims(format!("duplicate frame index {}", pair[0].0)));
        }
        if pair[1].0 != pair[0].0 + 1 {
            return Err(Error::dims(format!("missing frame index {}", pair[0].0 + 1)));
        }
    }

    let decoded: Vec<DecodedFrame> = found.par_iter().map(|(_, p)| decode_frame(p)).collect::<Result<_>>()?;
    let first = &decoded[0];
    for (d, (idx, _)) in decoded.iter().zip(&found) {
        if (d.channels, d.height, d.width) != (first.channels, first.height, first.width) {
            return Err(Error::dims(format!(
                "frame {idx} is {}x{}x{}, expected {}x{}x{}",
                d.channels, d.height, d.width, first.channels, first.height, first.width
            )));
        }
    }
    let (c, h, w) = (first.channels, first.height, first.width);
    let mut data = Vec::with_capacity(decoded.len() * c * h * w);
    for d in &decoded {
        data.extend_from_slice(&d.data);
    }
    VideoTensor::new(decoded.len(), c, h, w, data)
}

fn to_u8(v: f32) -> u8 {
    (v.clamp(0.0, 1.0) * 255.0).round() as u8
}

/// Writes one image per frame; the format follows the template's extension
/// (`.ppm`/`.pgm` or `.png`).
pub fn save_frame_sequence(video: &VideoTensor, dir: impl AsRef<Path>, pattern: &str) -> Result<()> {
    let dir = dir.as_ref();
    let template = FrameTemplate::parse(pattern)?;
    fs::create_dir_all(dir)?;
    (0..video.frames).into_par_iter().try_for_each(|f| {
        let path = dir.join(template.render(f));
        save_frame(&video.frame(f), &path)
    })
}

pub fn save_frame(frame: &Frame, path: &Path) -> Result<()> {
    let (h, w, c) = (frame.height, frame.width, frame.channels);
    let mut buf = vec![0u8; h * w * c];
    for i in 0..h * w {
        for ch in 0..c {
            buf[i * c + ch] = to_u8(frame.data[ch * h * w + i]);
        }
    }
    let color = if c == 1 {
        image::ExtendedColorType::L8
    } else {
        image::ExtendedColorType::Rgb8
    };
    image::save_buffer(path, &buf, w as u32, h as u32, color)?;
    Ok(())
}

/// `floor(i·total/n)` for `i in 0..n`.
///
/// ```
/// use mgspool::media::uniform_sample_indices;
///
/// assert_eq!(uniform_sample_indices(16, 4).unwrap(), [0, 4, 8, 12]);
/// assert_eq!(uniform_sample_indices(7, 3).unwrap(), [0, 2, 4]);
/// assert!(uniform_sample_indices(3, 4).is_err());
/// ```
pub fn uniform_sample_indices(total: usize, n: usize) -> Result<Vec<usize>> {
    if n == 0 {
        return Err(Error::arg("sample count must be at least 1"));
    }
    if n > total {
        return Err(Error::arg(format!("cannot sample {n} frames from {total}")));
    }
    Ok((0..n).map(|i| i * total / n).collect())
}

/// Placement of one tile inside a superimage.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TileInfo {
    pub frame_index: usize,
    pub label: usize,
    pub row: usize,
    pub col: usize,
    /// Label box size, clipped to the tile.
    pub label_box: (usize, usize),
}

#[derive(Debug, Clone)]
pub struct Superimage {
    pub image: Frame,
    pub rows: usize,
    pub cols: usize,
    pub tiles: Vec<TileInfo>,
}

/// Tiles `n_samples` uniformly sampled frames into a `ceil(n/cols)×cols`
/// grid and stamps each tile's 1-based frame number in its top-left corner,
/// white on a black box. Unused tiles stay black.
pub fn build_superimage(video: &VideoTensor, n_samples: usize, cols: usize) -> Result<Superimage> {
    if cols == 0 {
        return Err(Error::arg("cols must be at least 1"));
    }
    let indices = uniform_sample_indices(video.frames, n_samples)?;
    let rows = n_samples.div_ceil(cols);
    let (th, tw, ch) = (video.height, video.width, video.channels);
    let mut image = Frame::filled(ch, rows * th, cols * tw, 0.0);
    let mut tiles = Vec::with_capacity(n_samples);

    for (slot, &fi) in indices.iter().enumerate() {
        let (row, col) = (slot / cols, slot % cols);
        let (oy, ox) = (row * th, col * tw);
        for c in 0..ch {
            for y in 0..th {
                for x in 0..tw {
                    image.set(c, oy + y, ox + x, video.get(fi, c, y, x));
                }
            }
        }
        let text = (fi + 1).to_string();
        let (bw, bh) = font::label_size(&text);
        font::render(&text, |x, y, on| {
            if x < tw && y < th {
                let v = if on { 1.0 } else { 0.0 };
                for c in 0..ch {
                    image.set(c, oy + y, ox + x, v);
                }
            }
        });
        tiles.push(TileInfo {
            frame_index: fi,
            label: fi + 1,
            row,
            col,
            label_box: (bw.min(tw), bh.min(th)),
        });
    }
    Ok(Superimage {
        image,
        rows,
        cols,
        tiles,
    })
}

/// Deterministic RGB test clip: a smooth background with a few coloured
/// rectangles drifting across frames.
pub fn synthetic_video(frames: usize, height: usize, width: usize, seed: u64) -> VideoTensor {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    struct Blob {
        color: [f32; 3],
        y: f32,
        x: f32,
        h: f32,
        w: f32,
        dy: f32,
        dx: f32,
    }
    let blobs: Vec<Blob> = (0..3)
        .map(|_| Blob {
            color: [rng.random(), rng.random(), rng.random()],
            y: rng.random_range(0.0..0.7),
            x: rng.random_range(0.0..0.7),
            h: rng.random_range(0.15..0.4),
            w: rng.random_range(0.15..0.4),
            dy: rng.random_range(-0.03..0.03),
            dx: rng.random_range(-0.03..0.03),
        })
        .collect();
    let base: [f32; 3] = [
        rng.random_range(0.1..0.5),
        rng.random_range(0.1..0.5),
        rng.random_range(0.1..0.5),
    ];

    let mut v = VideoTensor::filled(frames, 3, height, width, 0.0);
    for f in 0..frames {
        for y in 0..height {
            for x in 0..width {
                let (ny, nx) = (y as f32 / height as f32, x as f32 / width as f32);
                let mut px = [base[0] + 0.3 * nx, base[1] + 0.3 * ny, base[2] + 0.15 * (nx + ny)];
                for b in &blobs {
                    let by = b.y + b.dy * f as f32;
                    let bx = b.x + b.dx * f as f32;
                    if ny >= by && ny < by + b.h && nx >= bx && nx < bx + b.w {
                        px = b.color;
                    }
                }
                for (c, val) in px.iter().enumerate() {
                    let i = v.index(f, c, y, x);
                    v.data[i] = val.clamp(0.0, 1.0);
                }
            }
        }
    }
    v
}
