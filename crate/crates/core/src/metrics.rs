//! Full-reference image metrics: PSNR, Gaussian-window SSIM and SSIM over
//! the region of no interest of an edit.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::media::{Frame, MaskVideo, VideoTensor};

/// PSNR reported for identical inputs.
pub const PSNR_CAP_DB: f64 = 100.0;

/// `10·log10(max² / MSE)` over all channels, capped at [`PSNR_CAP_DB`].
pub fn psnr(a: &Frame, b: &Frame, max_value: f64) -> Result<f64> {
    if !a.same_shape(b) {
        return Err(Error::arg("psnr inputs differ in shape"));
    }
    let mse = a
        .data
        .iter()
        .zip(&b.data)
        .map(|(&x, &y)| (x as f64 - y as f64).powi(2))
        .sum::<f64>()
        / a.data.len() as f64;
    if mse == 0.0 {
        return Ok(PSNR_CAP_DB);
    }
    Ok((10.0 * (max_value * max_value / mse).log10()).min(PSNR_CAP_DB))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SsimConfig {
    pub window: usize,
    pub sigma: f64,
    pub k1: f64,
    pub k2: f64,
    pub dynamic_range: f64,
}

impl Default for SsimConfig {
    fn default() -> Self {
        Self {
            window: 11,
            sigma: 1.5,
            k1: 0.01,
            k2: 0.03,
            dynamic_range: 1.0,
        }
    }
}

impl SsimConfig {
    pub fn validate(&self) -> Result<()> {
        if self.window < 3 || self.window.is_multiple_of(2) {
            return Err(Error::arg(format!(
                "window must be odd and at least 3, got {}",
                self.window
            )));
        }
        if !(self.sigma > 0.0 && self.k1 > 0.0 && self.k2 > 0.0 && self.dynamic_range > 0.0) {
            return Err(Error::arg("sigma, k1, k2 and dynamic_range must be positive"));
        }
        Ok(())
    }

    fn kernel(&self) -> Vec<f64> {
        let r = (self.window / 2) as f64;
        let g: Vec<f64> = (0..self.window)
            .map(|i| (-((i as f64 - r).powi(2)) / (2.0 * self.sigma * self.sigma)).exp())
            .collect();
        let s: f64 = g.iter().sum();
        g.into_iter().map(|x| x / s).collect()
    }
}

/// Separable Gaussian filter over the valid region only: output is
/// `(h − win + 1)×(w − win + 1)`.
fn filter_valid(plane: &[f64], h: usize, w: usize, k: &[f64]) -> Vec<f64> {
    let win = k.len();
    let (oh, ow) = (h - win + 1, w - win + 1);
    let mut tmp = vec![0f64; h * ow];
    for y in 0..h {
        let row = &plane[y * w..(y + 1) * w];
        for x in 0..ow {
            tmp[y * ow + x] = k.iter().zip(&row[x..x + win]).map(|(a, b)| a * b).sum();
        }
    }
    let mut out = vec![0f64; oh * ow];
    for y in 0..oh {
        for x in 0..ow {
            out[y * ow + x] = (0..win).map(|i| k[i] * tmp[(y + i) * ow + x]).sum();
        }
    }
    out
}

/// Per-position SSIM over the valid region of one plane.
fn ssim_map(a: &[f32], b: &[f32], h: usize, w: usize, cfg: &SsimConfig) -> Vec<f64> {
    let k = cfg.kernel();
    let a: Vec<f64> = a.iter().map(|&x| x as f64).collect();
    let b: Vec<f64> = b.iter().map(|&x| x as f64).collect();
    let prod = |p: &[f64], q: &[f64]| p.iter().zip(q).map(|(x, y)| x * y).collect::<Vec<_>>();
    let mu_a = filter_valid(&a, h, w, &k);
    let mu_b = filter_valid(&b, h, w, &k);
    let e_aa = filter_valid(&prod(&a, &a), h, w, &k);
    let e_bb = filter_valid(&prod(&b, &b), h, w, &k);
    let e_ab = filter_valid(&prod(&a, &b), h, w, &k);
    let c1 = (cfg.k1 * cfg.dynamic_range).powi(2);
    let c2 = (cfg.k2 * cfg.dynamic_range).powi(2);
    (0..mu_a.len())
        .map(|i| {
            let (ma, mb) = (mu_a[i], mu_b[i]);
            let va = e_aa[i] - ma * ma;
            let vb = e_bb[i] - mb * mb;
            let cov = e_ab[i] - ma * mb;
            ((2.0 * ma * mb + c1) * (2.0 * cov + c2)) / ((ma * ma + mb * mb + c1) * (va + vb + c2))
        })
        .collect()
}

fn check_pair(a: &Frame, b: &Frame, cfg: &SsimConfig) -> Result<()> {
    cfg.validate()?;
    if !a.same_shape(b) {
        return Err(Error::arg("ssim inputs differ in shape"));
    }
    if a.height.min(a.width) < cfg.window {
        return Err(Error::arg(format!(
            "{}x{} frame is smaller than the {} pixel window",
            a.height, a.width, cfg.window
        )));
    }
    Ok(())
}

/// Mean SSIM over valid window positions, averaged over channels.
pub fn ssim(a: &Frame, b: &Frame, cfg: &SsimConfig) -> Result<f64> {
    check_pair(a, b, cfg)?;
    let per_channel: f64 = (0..a.channels)
        .map(|c| {
            let m = ssim_map(a.plane(c), b.plane(c), a.height, a.width, cfg);
            m.iter().sum::<f64>() / m.len() as f64
        })
        .sum();
    Ok(per_channel / a.channels as f64)
}

/// How the region of interest is kept out of masked SSIM.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RoiHandling {
    /// Set ROI pixels to zero in both frames, then score the whole frame.
    #[default]
    ZeroFill,
    /// Score only window positions whose footprint avoids the ROI. A frame
    /// with no such position scores 1.
    ExcludeWindows,
}

fn masked_frame_ssim(a: &Frame, b: &Frame, roi: &[u8], cfg: &SsimConfig, handling: RoiHandling) -> Result<f64> {
    match handling {
        RoiHandling::ZeroFill => {
            let zero = |f: &Frame| {
                let mut out = f.clone();
                let n = f.height * f.width;
                for c in 0..f.channels {
                    for (p, &m) in roi.iter().enumerate() {
                        if m != 0 {
                            out.data[c * n + p] = 0.0;
                        }
                    }
                }
                out
            };
            ssim(&zero(a), &zero(b), cfg)
        }
        RoiHandling::ExcludeWindows => {
            check_pair(a, b, cfg)?;
            let (h, w, win) = (a.height, a.width, cfg.window);
            let ow = w - win + 1;
            let oh = h - win + 1;
            // summed-area table of the ROI for window hit tests
            let mut sat = vec![0u32; (h + 1) * (w + 1)];
            for y in 0..h {
                for x in 0..w {
                    sat[(y + 1) * (w + 1) + x + 1] =
                        roi[y * w + x] as u32 + sat[y * (w + 1) + x + 1] + sat[(y + 1) * (w + 1) + x]
                            - sat[y * (w + 1) + x];
                }
            }
            let clean: Vec<bool> = (0..oh * ow)
                .map(|i| {
                    let (y, x) = (i / ow, i % ow);
                    let s = sat[(y + win) * (w + 1) + x + win] + sat[y * (w + 1) + x]
                        - sat[y * (w + 1) + x + win]
                        - sat[(y + win) * (w + 1) + x];
                    s == 0
                })
                .collect();
            let kept = clean.iter().filter(|&&c| c).count();
            if kept == 0 {
                return Ok(1.0);
            }
            let total: f64 = (0..a.channels)
                .map(|c| {
                    let m = ssim_map(a.plane(c), b.plane(c), h, w, cfg);
                    m.iter().zip(&clean).filter(|(_, &c)| c).map(|(v, _)| v).sum::<f64>() / kept as f64
                })
                .sum();
            Ok(total / a.channels as f64)
        }
    }
}

/// Per-frame SSIM outside the region of interest `roi`.
pub fn masked_ssim_per_frame(
    original: &VideoTensor,
    edited: &VideoTensor,
    roi: &MaskVideo,
    cfg: &SsimConfig,
    handling: RoiHandling,
) -> Result<Vec<f64>> {
    let shape = |v: &VideoTensor| (v.frames, v.channels, v.height, v.width);
    if shape(original) != shape(edited) {
        return Err(Error::arg("original and edited videos differ in shape"));
    }
    if (roi.frames, roi.height, roi.width) != (original.frames, original.height, original.width) {
        return Err(Error::arg("roi mask does not match the video shape"));
    }
    (0..original.frames)
        .into_par_iter()
        .map(|f| masked_frame_ssim(&original.frame(f), &edited.frame(f), roi.frame_slice(f), cfg, handling))
        .collect()
}

/// Video-level region-of-no-interest SSIM: the mean of the per-frame
/// scores.
pub fn masked_ssim(
    original: &VideoTensor,
    edited: &VideoTensor,
    roi: &MaskVideo,
    cfg: &SsimConfig,
    handling: RoiHandling,
) -> Result<f64> {
    video_mean(&masked_ssim_per_frame(original, edited, roi, cfg, handling)?)
}

pub fn video_mean(per_frame: &[f64]) -> Result<f64> {
    if per_frame.is_empty() {
        return Err(Error::arg("cannot average an empty list"));
    }
    Ok(per_frame.iter().sum::<f64>() / per_frame.len() as f64)
}

fn per_frame(a: &VideoTensor, b: &VideoTensor, f: impl Fn(&Frame, &Frame) -> Result<f64> + Sync) -> Result<Vec<f64>> {
    if a.frames != b.frames {
        return Err(Error::arg(format!("{} frames against {}", a.frames, b.frames)));
    }
    (0..a.frames)
        .into_par_iter()
        .map(|i| f(&a.frame(i), &b.frame(i)))
        .collect()
}

pub fn psnr_per_frame(a: &VideoTensor, b: &VideoTensor, max_value: f64) -> Result<Vec<f64>> {
    per_frame(a, b, |x, y| psnr(x, y, max_value))
}

pub fn ssim_per_frame(a: &VideoTensor, b: &VideoTensor, cfg: &SsimConfig) -> Result<Vec<f64>> {
    per_frame(a, b, |x, y| ssim(x, y, cfg))
}

/// `{metric, per_frame, mean}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricReport {
    pub metric: String,
    pub per_frame: Vec<f64>,
    pub mean: f64,
}

impl MetricReport {
    pub fn new(metric: impl Into<String>, per_frame: Vec<f64>) -> Result<Self> {
        let mean = video_mean(&per_frame)?;
        Ok(Self {
            metric: metric.into(),
            per_frame,
            mean,
        })
    }
}
