//! Spatial, temporal and multi-granular (mask-weighted) token pooling over
//! an encoder feature grid, and the projected token sequence built from
//! them.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::media::VideoTensor;
use crate::okm::ClusterMasks;
use crate::tensor::{Matrix, TensorFile};

/// Encoder output `e`, shaped `t×h×w×d`.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureGrid {
    pub t: usize,
    pub h: usize,
    pub w: usize,
    pub d: usize,
    pub data: Vec<f32>,
}

impl FeatureGrid {
    pub fn new(t: usize, h: usize, w: usize, d: usize, data: Vec<f32>) -> Result<Self> {
        if t == 0 || h == 0 || w == 0 || d == 0 {
            return Err(Error::arg("feature grid dimensions must all be at least 1"));
        }
        if data.len() != t * h * w * d {
            return Err(Error::dims(format!(
                "{t}x{h}x{w}x{d} grid needs {} values, got {}",
                t * h * w * d,
                data.len()
            )));
        }
        if data.iter().any(|x| !x.is_finite()) {
            return Err(Error::arg("feature grid contains non-finite values"));
        }
        Ok(Self { t, h, w, d, data })
    }

    pub fn filled(t: usize, h: usize, w: usize, d: usize, value: f32) -> Self {
        Self::new(t, h, w, d, vec![value; t * h * w * d]).expect("valid constant grid")
    }

    pub fn tokens(&self) -> usize {
        self.t * self.h * self.w
    }

    /// Token `i` in `(τ, y, x)` row-major order.
    pub fn token(&self, i: usize) -> &[f32] {
        &self.data[i * self.d..(i + 1) * self.d]
    }

    pub fn token_at(&self, tau: usize, y: usize, x: usize) -> &[f32] {
        self.token((tau * self.h + y) * self.w + x)
    }

    pub fn to_tensor(&self) -> TensorFile {
        TensorFile::from_f32(vec![self.t, self.h, self.w, self.d], self.data.clone()).expect("grid shape is consistent")
    }

    pub fn from_tensor(t: &TensorFile) -> Result<Self> {
        let [tt, h, w, d] = *t.dims() else {
            return Err(Error::format("feature grid must be rank 4 (t,h,w,d)"));
        };
        Self::new(tt, h, w, d, t.to_f32_vec())
    }
}

fn mean_rows<'a>(rows: impl Iterator<Item = &'a [f32]>, d: usize) -> Vec<f32> {
    let mut acc = vec![0f64; d];
    let mut n = 0usize;
    for r in rows {
        for (a, &x) in acc.iter_mut().zip(r) {
            *a += x as f64;
        }
        n += 1;
    }
    acc.into_iter().map(|a| (a / n as f64) as f32).collect()
}

/// `e^s`: row `τ` is the mean of the `h·w` tokens of slice `τ`.
pub fn spatial_pool(grid: &FeatureGrid) -> Matrix {
    let hw = grid.h * grid.w;
    let data = (0..grid.t)
        .into_par_iter()
        .flat_map_iter(|tau| mean_rows((0..hw).map(|j| grid.token(tau * hw + j)), grid.d))
        .collect();
    Matrix::from_vec(grid.t, grid.d, data).expect("shape by construction")
}

/// `e^t`: row `y·w + x` is the mean over time of token `(·, y, x)`.
pub fn temporal_pool(grid: &FeatureGrid) -> Matrix {
    let hw = grid.h * grid.w;
    let data = (0..hw)
        .into_par_iter()
        .flat_map_iter(|j| mean_rows((0..grid.t).map(|tau| grid.token(tau * hw + j)), grid.d))
        .collect();
    Matrix::from_vec(hw, grid.d, data).expect("shape by construction")
}

/// How mask-weighted token sums are scaled.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MgsNormalization {
    /// `Σ M·e / Σ M`, a weighted mean.
    #[default]
    Normalized,
    /// `Σ M·e`, the bare contraction of the downsampled mask with the grid.
    Unnormalized,
}

/// Maps pixel `(f, y, x)` of an `F×H×W` video onto token `(τ, y', x')` of
/// a `t×h×w` grid with `τ = ⌊f·t/F⌋` and likewise for rows and columns.
#[derive(Debug, Clone)]
pub struct CellMap {
    /// Token index of every pixel.
    pub cell: Vec<u32>,
    /// Number of pixels in every token cell.
    pub cell_size: Vec<u32>,
}

impl CellMap {
    pub fn new(frames: usize, height: usize, width: usize, t: usize, h: usize, w: usize) -> Result<Self> {
        if frames < t || height < h || width < w {
            return Err(Error::arg(format!(
                "{frames}x{height}x{width} pixels cannot cover a {t}x{h}x{w} token grid"
            )));
        }
        let ft: Vec<usize> = (0..frames).map(|f| f * t / frames).collect();
        let fy: Vec<usize> = (0..height).map(|y| y * h / height).collect();
        let fx: Vec<usize> = (0..width).map(|x| x * w / width).collect();
        let mut cell = Vec::with_capacity(frames * height * width);
        let mut cell_size = vec![0u32; t * h * w];
        for &tau in &ft {
            for &yy in &fy {
                for &xx in &fx {
                    let c = (tau * h + yy) * w + xx;
                    cell.push(c as u32);
                    cell_size[c] += 1;
                }
            }
        }
        Ok(Self { cell, cell_size })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MgsTokens {
    /// `e^l`, `k×d`.
    pub tokens: Matrix,
    /// True where the cluster mask is empty; those rows are zero.
    pub empty: Vec<bool>,
}

/// `e^l`: each mask is averaged down to the token grid, giving weights
/// `M_i ∈ [0,1]^{t×h×w}`, which then weight the grid tokens.
pub fn mgs_pool(masks: &ClusterMasks, grid: &FeatureGrid, norm: MgsNormalization) -> Result<MgsTokens> {
    let cells = CellMap::new(masks.frames, masks.height, masks.width, grid.t, grid.h, grid.w)?;
    let d = grid.d;
    let rows: Vec<(Vec<f32>, bool)> = (0..masks.k)
        .into_par_iter()
        .map(|i| {
            let mut hits = vec![0u32; grid.tokens()];
            for (&m, &c) in masks.mask(i).iter().zip(&cells.cell) {
                if m != 0 {
                    hits[c as usize] += 1;
                }
            }
            let mut acc = vec![0f64; d];
            let mut total = 0f64;
            for (c, &n) in hits.iter().enumerate() {
                if n == 0 {
                    continue;
                }
                let weight = n as f64 / cells.cell_size[c] as f64;
                total += weight;
                for (a, &x) in acc.iter_mut().zip(grid.token(c)) {
                    *a += weight * x as f64;
                }
            }
            if total == 0.0 {
                return (vec![0.0; d], true);
            }
            let scale = match norm {
                MgsNormalization::Normalized => 1.0 / total,
                MgsNormalization::Unnormalized => 1.0,
            };
            (acc.into_iter().map(|a| (a * scale) as f32).collect(), false)
        })
        .collect();
    let empty = rows.iter().map(|r| r.1).collect();
    let data = rows.into_iter().flat_map(|r| r.0).collect();
    Ok(MgsTokens {
        tokens: Matrix::from_vec(masks.k, d, data)?,
        empty,
    })
}

/// The three pooled token sets.
#[derive(Debug, Clone, PartialEq)]
pub struct TokenSet {
    pub spatial: Matrix,
    pub temporal: Matrix,
    pub mgs: Matrix,
    pub mgs_empty: Vec<bool>,
}

impl TokenSet {
    pub fn pool(masks: &ClusterMasks, grid: &FeatureGrid, norm: MgsNormalization) -> Result<Self> {
        let mgs = mgs_pool(masks, grid, norm)?;
        Ok(Self {
            spatial: spatial_pool(grid),
            temporal: temporal_pool(grid),
            mgs: mgs.tokens,
            mgs_empty: mgs.empty,
        })
    }

    pub fn dim(&self) -> usize {
        self.spatial.cols
    }

    /// Rows in the order `[spatial; mgs; temporal]`.
    pub fn concat(&self) -> Result<Matrix> {
        Matrix::vstack(&[&self.spatial, &self.mgs, &self.temporal])
    }
}

/// Linear map from the pooled feature size `d` to the output size `d′`,
/// stored `d×d′` and applied as `x·W`.
#[derive(Debug, Clone, PartialEq)]
pub struct ProjectionMatrix(pub Matrix);

impl ProjectionMatrix {
    pub fn new(m: Matrix) -> Result<Self> {
        if m.data.iter().any(|x| !x.is_finite()) {
            return Err(Error::arg("projection contains non-finite values"));
        }
        Ok(Self(m))
    }

    pub fn identity(d: usize) -> Self {
        Self(Matrix::identity(d))
    }

    pub fn d_in(&self) -> usize {
        self.0.rows
    }

    pub fn d_out(&self) -> usize {
        self.0.cols
    }
}

/// `ê`: the concatenated tokens, `(t + k + h·w)×d′`.
pub fn assemble_tokens(tokens: &TokenSet, proj: &ProjectionMatrix) -> Result<Matrix> {
    let x = tokens.concat()?;
    if x.cols != proj.d_in() {
        return Err(Error::arg(format!(
            "tokens have {} features, projection expects {}",
            x.cols,
            proj.d_in()
        )));
    }
    let w = &proj.0;
    let data = (0..x.rows)
        .into_par_iter()
        .flat_map_iter(|r| {
            let row = x.row(r);
            (0..w.cols).map(move |j| {
                let mut acc = 0f64;
                for (i, &xi) in row.iter().enumerate() {
                    let wij = w.get(i, j);
                    // zero weights are skipped so that an identity projection
                    // reproduces its input bit for bit
                    if wij != 0.0 {
                        acc += xi as f64 * wij as f64;
                    }
                }
                acc as f32
            })
        })
        .collect();
    Matrix::from_vec(x.rows, w.cols, data)
}

/// Stand-in encoder: token `(τ, y, x)` is the mean colour of its pixel cell
/// followed by `(τ/t, y/h, x/w)`, so `d = C + 3`.
pub fn toy_encode(video: &VideoTensor, t: usize, h: usize, w: usize) -> Result<FeatureGrid> {
    if t == 0 || h == 0 || w == 0 {
        return Err(Error::arg("token grid dimensions must all be at least 1"));
    }
    let cells = CellMap::new(video.frames, video.height, video.width, t, h, w)?;
    let c = video.channels;
    let n = video.pixels_per_frame();
    let mut sums = vec![0f64; t * h * w * c];
    for f in 0..video.frames {
        let frame = video.frame_slice(f);
        for p in 0..n {
            let cell = cells.cell[f * n + p] as usize;
            for ch in 0..c {
                sums[cell * c + ch] += frame[ch * n + p] as f64;
            }
        }
    }
    let d = c + 3;
    let mut data = Vec::with_capacity(t * h * w * d);
    for tau in 0..t {
        for y in 0..h {
            for x in 0..w {
                let cell = (tau * h + y) * w + x;
                let size = cells.cell_size[cell] as f64;
                data.extend((0..c).map(|ch| (sums[cell * c + ch] / size) as f32));
                data.push(tau as f32 / t as f32);
                data.push(y as f32 / h as f32);
                data.push(x as f32 / w as f32);
            }
        }
    }
    FeatureGrid::new(t, h, w, d, data)
}
