//! Per-frame superpixels: grid initialization, SLIC refinement with
//! connectivity enforcement, averaged superpixel features, and loading of
//! label maps produced by external segmenters.
//!
//! Superpixels never cross frame boundaries. Time enters only through the
//! frame-index feature, which lets the clustering stage group superpixels
//! from different frames.

use std::collections::BTreeSet;
use std::collections::VecDeque;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::media::VideoTensor;
use crate::tensor::{read_tensor, Matrix, TensorFile};

/// Averaged pixel features, one row per superpixel.
pub type SuperpixelFeatures = Matrix;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ColorSpace {
    Rgb,
    Lab,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SuperpixelConfig {
    pub regions_per_frame: usize,
    /// Weight of the spatial term in the SLIC distance.
    pub compactness: f64,
    pub iterations: usize,
    pub color_space: ColorSpace,
    /// Scale of the `f/F` feature.
    pub temporal_weight: f64,
}

impl Default for SuperpixelConfig {
    fn default() -> Self {
        Self {
            regions_per_frame: 64,
            compactness: 10.0,
            iterations: 10,
            color_space: ColorSpace::Lab,
            temporal_weight: 1.0,
        }
    }
}

impl SuperpixelConfig {
    pub fn validate(&self) -> Result<()> {
        if self.regions_per_frame == 0 {
            return Err(Error::arg("regions_per_frame must be at least 1"));
        }
        if self.compactness.is_nan() || self.compactness <= 0.0 {
            return Err(Error::arg("compactness must be positive"));
        }
        if !self.temporal_weight.is_finite() {
            return Err(Error::arg("temporal_weight must be finite"));
        }
        Ok(())
    }
}

/// Superpixel index of every pixel of an `F×H×W` video.
///
/// Indices are dense (`0..count`), grouped by frame: superpixels of frame
/// `f` are `frame_offsets[f]..frame_offsets[f + 1]`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SuperpixelMap {
    pub frames: usize,
    pub height: usize,
    pub width: usize,
    pub labels: Vec<u32>,
    pub count: usize,
    /// `frames + 1` entries; the last equals `count`.
    pub frame_offsets: Vec<usize>,
}

impl SuperpixelMap {
    fn from_local(frames: usize, height: usize, width: usize, local: Vec<(Vec<u32>, usize)>) -> Self {
        let mut labels = Vec::with_capacity(frames * height * width);
        let mut frame_offsets = Vec::with_capacity(frames + 1);
        let mut offset = 0usize;
        for (l, n) in local {
            frame_offsets.push(offset);
            labels.extend(l.iter().map(|&x| x + offset as u32));
            offset += n;
        }
        frame_offsets.push(offset);
        Self {
            frames,
            height,
            width,
            labels,
            count: offset,
            frame_offsets,
        }
    }

    pub fn frame_labels(&self, f: usize) -> &[u32] {
        let n = self.height * self.width;
        &self.labels[f * n..(f + 1) * n]
    }

    pub fn superpixels_in_frame(&self, f: usize) -> usize {
        self.frame_offsets[f + 1] - self.frame_offsets[f]
    }

    /// Pixel count of every superpixel.
    pub fn sizes(&self) -> Vec<usize> {
        let mut sizes = vec![0usize; self.count];
        for &l in &self.labels {
            sizes[l as usize] += 1;
        }
        sizes
    }

    /// Checks the partition, density, per-frame and 4-connectivity
    /// invariants.
    pub fn check_invariants(&self) -> Result<()> {
        let n = self.height * self.width;
        if self.labels.len() != self.frames * n {
            return Err(Error::dims("label count does not match F·H·W"));
        }
        if self.frame_offsets.len() != self.frames + 1 || self.frame_offsets[self.frames] != self.count {
            return Err(Error::format("frame offsets are inconsistent"));
        }
        let mut seen_comp = vec![false; self.count];
        for f in 0..self.frames {
            let labels = self.frame_labels(f);
            let (lo, hi) = (self.frame_offsets[f], self.frame_offsets[f + 1]);
            let mut present = vec![false; hi - lo];
            for &l in labels {
                let l = l as usize;
                if l < lo || l >= hi {
                    return Err(Error::format(format!("label {l} in frame {f} outside {lo}..{hi}")));
                }
                present[l - lo] = true;
            }
            if let Some(missing) = present.iter().position(|p| !p) {
                return Err(Error::format(format!("label {} never occurs", lo + missing)));
            }
            let comps = components(labels, self.height, self.width);
            for &cl in &comps.label {
                let cl = cl as usize;
                if seen_comp[cl] {
                    return Err(Error::format(format!("superpixel {cl} is not 4-connected")));
                }
                seen_comp[cl] = true;
            }
        }
        Ok(())
    }

    /// Rank-3 `(F, H, W)` f32 tensor of labels.
    pub fn to_tensor(&self) -> TensorFile {
        TensorFile::from_f32(
            vec![self.frames, self.height, self.width],
            self.labels.iter().map(|&l| l as f32).collect(),
        )
        .expect("map shape is consistent")
    }

    /// Builds a map from an external `(F, H, W)` label tensor.
    ///
    /// Labels must be non-negative integers. Each 4-connected region of
    /// equal label within a frame becomes one superpixel, so labels shared
    /// across frames or split into islands produce several superpixels.
    /// New indices follow (frame, original label, first pixel in raster
    /// order), which leaves an already-dense map unchanged.
    pub fn from_label_tensor(t: &TensorFile) -> Result<Self> {
        let [frames, height, width] = *t.dims() else {
            return Err(Error::format(format!(
                "superpixel map must be rank 3 (F,H,W), got rank {}",
                t.rank()
            )));
        };
        let mut raw = Vec::with_capacity(t.data().len());
        for i in 0..t.data().len() {
            let v = t.data().get_f64(i);
            if !v.is_finite() || v < 0.0 || v.fract() != 0.0 || v > u32::MAX as f64 {
                return Err(Error::format(format!(
                    "label {v} at element {i} is not a non-negative integer"
                )));
            }
            raw.push(v as u32);
        }
        let n = height * width;
        let local: Vec<(Vec<u32>, usize)> = (0..frames)
            .into_par_iter()
            .map(|f| {
                let labels = &raw[f * n..(f + 1) * n];
                let comps = components(labels, height, width);
                let mut order: Vec<usize> = (0..comps.label.len()).collect();
                order.sort_by_key(|&c| (comps.label[c], c));
                let mut rank = vec![0u32; order.len()];
                for (new, &c) in order.iter().enumerate() {
                    rank[c] = new as u32;
                }
                let out = comps.id.iter().map(|&c| rank[c as usize]).collect();
                (out, order.len())
            })
            .collect();
        Ok(Self::from_local(frames, height, width, local))
    }
}

pub fn load_precomputed_map(path: impl AsRef<Path>) -> Result<SuperpixelMap> {
    SuperpixelMap::from_label_tensor(&read_tensor(path)?)
}

/// Sizes of `n` parts of `len` that differ by at most one, larger first.
fn split_sizes(len: usize, n: usize) -> Vec<usize> {
    (0..n).map(|i| len / n + usize::from(i < len % n)).collect()
}

fn cell_of(len: usize, n: usize) -> Vec<usize> {
    split_sizes(len, n)
        .into_iter()
        .enumerate()
        .flat_map(|(i, s)| std::iter::repeat_n(i, s))
        .collect()
}

/// Grid shape `(rows, cols)` used for `regions` cells on an `h×w` frame.
pub fn grid_shape(h: usize, w: usize, regions: usize) -> (usize, usize) {
    let gy = ((regions as f64 * h as f64 / w as f64).sqrt().round() as usize).clamp(1, h);
    let gx = regions.div_ceil(gy).clamp(1, w);
    (gy, gx)
}

/// Rectangular grid labeling with about `regions_per_frame` cells per frame.
pub fn grid_init(frames: usize, height: usize, width: usize, regions_per_frame: usize) -> Result<SuperpixelMap> {
    if frames == 0 || height == 0 || width == 0 {
        return Err(Error::arg("video dimensions must all be at least 1"));
    }
    if regions_per_frame == 0 || regions_per_frame > height * width {
        return Err(Error::arg(format!(
            "regions_per_frame must be in 1..={}, got {regions_per_frame}",
            height * width
        )));
    }
    let (gy, gx) = grid_shape(height, width, regions_per_frame);
    let rows = cell_of(height, gy);
    let cols = cell_of(width, gx);
    let mut frame = Vec::with_capacity(height * width);
    for &r in &rows {
        for &c in &cols {
            frame.push((r * gx + c) as u32);
        }
    }
    let local = (0..frames).map(|_| (frame.clone(), gy * gx)).collect();
    Ok(SuperpixelMap::from_local(frames, height, width, local))
}

/// Per-pixel features, `F×H×W×dim`.
#[derive(Debug, Clone, PartialEq)]
pub struct PixelFeatures {
    pub frames: usize,
    pub height: usize,
    pub width: usize,
    pub dim: usize,
    pub data: Vec<f32>,
}

impl PixelFeatures {
    pub fn pixel(&self, f: usize, y: usize, x: usize) -> &[f32] {
        let i = ((f * self.height + y) * self.width + x) * self.dim;
        &self.data[i..i + self.dim]
    }
}

fn srgb_to_linear(c: f64) -> f64 {
    if c <= 0.04045 {
        c / 12.92
    } else {
        ((c + 0.055) / 1.055).powf(2.4)
    }
}

fn lab_f(t: f64) -> f64 {
    const DELTA: f64 = 6.0 / 29.0;
    if t > DELTA * DELTA * DELTA {
        t.cbrt()
    } else {
        t / (3.0 * DELTA * DELTA) + 4.0 / 29.0
    }
}

/// sRGB in `[0,1]` to CIE Lab under D65.
pub fn srgb_to_lab(r: f64, g: f64, b: f64) -> [f64; 3] {
    let (r, g, b) = (srgb_to_linear(r), srgb_to_linear(g), srgb_to_linear(b));
    let x = 0.4124564 * r + 0.3575761 * g + 0.1804375 * b;
    let y = 0.2126729 * r + 0.7151522 * g + 0.0721750 * b;
    let z = 0.0193339 * r + 0.1191920 * g + 0.9503041 * b;
    let (fx, fy, fz) = (lab_f(x / 0.95047), lab_f(y), lab_f(z / 1.08883));
    [116.0 * fy - 16.0, 500.0 * (fx - fy), 200.0 * (fy - fz)]
}

/// Colour of every pixel of frame `f` in `[0,1]`-ish units: raw channels
/// for rgb, Lab divided by 100 for lab. Grey videos map to `L/100` in lab
/// mode.
fn frame_colors(video: &VideoTensor, f: usize, space: ColorSpace) -> Vec<[f64; 3]> {
    let n = video.pixels_per_frame();
    let frame = video.frame_slice(f);
    (0..n)
        .map(|i| {
            let ch = |c: usize| frame[c * n + i] as f64;
            match (space, video.channels) {
                (ColorSpace::Rgb, 1) => [ch(0), 0.0, 0.0],
                (ColorSpace::Rgb, _) => [ch(0), ch(1), ch(2)],
                (ColorSpace::Lab, 1) => {
                    let l = srgb_to_lab(ch(0), ch(0), ch(0))[0];
                    [l / 100.0, 0.0, 0.0]
                }
                (ColorSpace::Lab, _) => {
                    let lab = srgb_to_lab(ch(0), ch(1), ch(2));
                    [lab[0] / 100.0, lab[1] / 100.0, lab[2] / 100.0]
                }
            }
        })
        .collect()
}

/// `[colour (C values), x/W, y/H, temporal_weight·f/F]` for every pixel.
pub fn pixel_features(video: &VideoTensor, config: &SuperpixelConfig) -> PixelFeatures {
    let (fr, h, w, c) = (video.frames, video.height, video.width, video.channels);
    let dim = c + 3;
    let per_frame: Vec<Vec<f32>> = (0..fr)
        .into_par_iter()
        .map(|f| {
            let colors = frame_colors(video, f, config.color_space);
            let t = (config.temporal_weight * f as f64 / fr as f64) as f32;
            let mut out = Vec::with_capacity(h * w * dim);
            for y in 0..h {
                for x in 0..w {
                    let col = &colors[y * w + x];
                    out.extend(col[..c].iter().map(|&v| v as f32));
                    out.push(x as f32 / w as f32);
                    out.push(y as f32 / h as f32);
                    out.push(t);
                }
            }
            out
        })
        .collect();
    PixelFeatures {
        frames: fr,
        height: h,
        width: w,
        dim,
        data: per_frame.concat(),
    }
}

/// Row `i` is the mean of `features` over the pixels of superpixel `i`.
pub fn superpixel_means(features: &PixelFeatures, map: &SuperpixelMap) -> Result<SuperpixelFeatures> {
    if (features.frames, features.height, features.width) != (map.frames, map.height, map.width) {
        return Err(Error::dims("feature and map shapes differ"));
    }
    let d = features.dim;
    let mut sums = vec![0f64; map.count * d];
    let mut counts = vec![0usize; map.count];
    for (p, &l) in map.labels.iter().enumerate() {
        let l = l as usize;
        counts[l] += 1;
        for (s, &v) in sums[l * d..(l + 1) * d]
            .iter_mut()
            .zip(&features.data[p * d..(p + 1) * d])
        {
            *s += v as f64;
        }
    }
    let data = sums
        .chunks_exact(d)
        .zip(&counts)
        .flat_map(|(row, &n)| row.iter().map(move |&s| (s / n.max(1) as f64) as f32))
        .collect();
    Matrix::from_vec(map.count, d, data)
}

struct Components {
    /// Component of every pixel, numbered in raster order of discovery.
    id: Vec<u32>,
    /// Label and size of every component.
    label: Vec<u32>,
    size: Vec<usize>,
}

fn components(labels: &[u32], h: usize, w: usize) -> Components {
    const NONE: u32 = u32::MAX;
    let mut id = vec![NONE; h * w];
    let mut label = Vec::new();
    let mut size = Vec::new();
    let mut queue = VecDeque::new();
    for start in 0..h * w {
        if id[start] != NONE {
            continue;
        }
        let c = label.len() as u32;
        let l = labels[start];
        id[start] = c;
        queue.push_back(start);
        let mut n = 0;
        while let Some(p) = queue.pop_front() {
            n += 1;
            let (y, x) = (p / w, p % w);
            let mut visit = |q: usize| {
                if id[q] == NONE && labels[q] == l {
                    id[q] = c;
                    queue.push_back(q);
                }
            };
            if x > 0 {
                visit(p - 1);
            }
            if x + 1 < w {
                visit(p + 1);
            }
            if y > 0 {
                visit(p - w);
            }
            if y + 1 < h {
                visit(p + w);
            }
        }
        label.push(l);
        size.push(n);
    }
    Components { id, label, size }
}

/// Keeps the largest component of every label and merges every other
/// component into the largest adjacent superpixel. Returns dense labels
/// (ordered by old label) and their count.
fn enforce_connectivity(labels: &[u32], h: usize, w: usize) -> (Vec<u32>, usize) {
    let comps = components(labels, h, w);
    let nc = comps.label.len();
    let max_label = comps.label.iter().copied().max().unwrap_or(0) as usize;

    let mut main_of_label = vec![usize::MAX; max_label + 1];
    for c in 0..nc {
        let l = comps.label[c] as usize;
        let m = main_of_label[l];
        if m == usize::MAX || comps.size[c] > comps.size[m] {
            main_of_label[l] = c;
        }
    }

    let mut adj = vec![BTreeSet::new(); nc];
    for p in 0..h * w {
        let (y, x) = (p / w, p % w);
        let a = comps.id[p] as usize;
        if x + 1 < w {
            let b = comps.id[p + 1] as usize;
            if a != b {
                adj[a].insert(b);
                adj[b].insert(a);
            }
        }
        if y + 1 < h {
            let b = comps.id[p + w] as usize;
            if a != b {
                adj[a].insert(b);
                adj[b].insert(a);
            }
        }
    }

    // owner[c] is the main component that c ends up in
    let mut owner: Vec<Option<usize>> = (0..nc)
        .map(|c| (main_of_label[comps.label[c] as usize] == c).then_some(c))
        .collect();
    let mut merged_size = comps.size.clone();
    let mut pending: Vec<usize> = (0..nc).filter(|&c| owner[c].is_none()).collect();
    while !pending.is_empty() {
        let mut next = Vec::new();
        for &o in &pending {
            let best = adj[o].iter().filter_map(|&n| owner[n]).max_by(|&a, &b| {
                merged_size[a]
                    .cmp(&merged_size[b])
                    .then(comps.label[b].cmp(&comps.label[a]))
            });
            match best {
                Some(m) => {
                    owner[o] = Some(m);
                    merged_size[m] += comps.size[o];
                }
                None => next.push(o),
            }
        }
        assert!(
            next.len() < pending.len(),
            "orphan components without resolvable neighbours"
        );
        pending = next;
    }

    let mut remap = vec![u32::MAX; max_label + 1];
    let mut used: Vec<u32> = owner.iter().map(|o| comps.label[o.unwrap()]).collect();
    used.sort_unstable();
    used.dedup();
    for (new, &old) in used.iter().enumerate() {
        remap[old as usize] = new as u32;
    }
    let out = comps
        .id
        .iter()
        .map(|&c| remap[comps.label[owner[c as usize].unwrap()] as usize])
        .collect();
    (out, used.len())
}

#[derive(Clone, Copy)]
struct Center {
    color: [f64; 3],
    y: f64,
    x: f64,
}

fn update_centers(colors: &[[f64; 3]], labels: &[u32], w: usize, centers: &mut [Center]) {
    let mut acc = vec![([0f64; 3], 0f64, 0f64, 0usize); centers.len()];
    for (p, &l) in labels.iter().enumerate() {
        let a = &mut acc[l as usize];
        for (s, &v) in a.0.iter_mut().zip(&colors[p]) {
            *s += v;
        }
        a.1 += (p / w) as f64;
        a.2 += (p % w) as f64;
        a.3 += 1;
    }
    for (center, (col, y, x, n)) in centers.iter_mut().zip(acc) {
        if n == 0 {
            continue;
        }
        let n = n as f64;
        *center = Center {
            color: [col[0] / n, col[1] / n, col[2] / n],
            y: y / n,
            x: x / n,
        };
    }
}

/// SLIC on one frame starting from `init` (dense local labels `0..n`).
fn slic_frame(
    colors: &[[f64; 3]],
    h: usize,
    w: usize,
    init: &[u32],
    n: usize,
    config: &SuperpixelConfig,
) -> (Vec<u32>, usize) {
    let mut labels = init.to_vec();
    if config.iterations > 0 {
        let mut centers = vec![
            Center {
                color: [0.0; 3],
                y: 0.0,
                x: 0.0
            };
            n
        ];
        update_centers(colors, &labels, w, &mut centers);
        let step = ((h * w) as f64 / n as f64).sqrt();
        // colour distances on a 0..100 scale, spatial distance in pixels
        let spatial = (config.compactness / step).powi(2);
        let mut dist = vec![f64::INFINITY; h * w];
        for _ in 0..config.iterations {
            dist.fill(f64::INFINITY);
            for (k, c) in centers.iter().enumerate() {
                let y0 = (c.y - step).floor().max(0.0) as usize;
                let y1 = ((c.y + step).ceil() as usize).min(h - 1);
                let x0 = (c.x - step).floor().max(0.0) as usize;
                let x1 = ((c.x + step).ceil() as usize).min(w - 1);
                for y in y0..=y1 {
                    for x in x0..=x1 {
                        let p = y * w + x;
                        let col = &colors[p];
                        let dc: f64 = (0..3).map(|i| (100.0 * (col[i] - c.color[i])).powi(2)).sum();
                        let ds = (y as f64 - c.y).powi(2) + (x as f64 - c.x).powi(2);
                        let d = dc + ds * spatial;
                        if d < dist[p] {
                            dist[p] = d;
                            labels[p] = k as u32;
                        }
                    }
                }
            }
            update_centers(colors, &labels, w, &mut centers);
        }
    }
    enforce_connectivity(&labels, h, w)
}

/// Refines `init` with SLIC and returns the connected map together with the
/// averaged pixel features of every superpixel.
pub fn refine_superpixels(
    video: &VideoTensor,
    init: &SuperpixelMap,
    config: &SuperpixelConfig,
) -> Result<(SuperpixelMap, SuperpixelFeatures)> {
    config.validate()?;
    let (fr, h, w) = (video.frames, video.height, video.width);
    if (init.frames, init.height, init.width) != (fr, h, w) {
        return Err(Error::dims(format!(
            "initial map is {}x{}x{}, video is {fr}x{h}x{w}",
            init.frames, init.height, init.width
        )));
    }
    let local: Vec<(Vec<u32>, usize)> = (0..fr)
        .into_par_iter()
        .map(|f| {
            let off = init.frame_offsets[f] as u32;
            let init_local: Vec<u32> = init.frame_labels(f).iter().map(|&l| l - off).collect();
            let colors = frame_colors(video, f, config.color_space);
            slic_frame(&colors, h, w, &init_local, init.superpixels_in_frame(f), config)
        })
        .collect();
    let map = SuperpixelMap::from_local(fr, h, w, local);
    let features = superpixel_means(&pixel_features(video, config), &map)?;
    Ok((map, features))
}

/// Grid initialization followed by refinement.
pub fn compute_superpixels(
    video: &VideoTensor,
    config: &SuperpixelConfig,
) -> Result<(SuperpixelMap, SuperpixelFeatures)> {
    let init = grid_init(video.frames, video.height, video.width, config.regions_per_frame)?;
    refine_superpixels(video, &init, config)
}
