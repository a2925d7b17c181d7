//! The training loss stack: L1 disparity loss, windowed SSIM, photometric
//! loss, its masked non-occlusion variant, and the confidence-weighted
//! combination.
//!
//! All terms are per-pixel maps. With estimated disparity `d_hat`, pseudo
//! label `d`, confidence `C`, and photometric reconstruction `L_p`:
//!
//! ```text
//! L_d    = |d_hat - d|
//! L_p    = beta * (1 - SSIM(left, reconstruction)) / 2
//!          + (1 - beta) * |left - reconstruction|_1
//! L_np   = M_noc * M_keep * valid * L_p
//! L_comb = C * L_d + mu * (1 - C) * L_np
//! ```
//!
//! where the reconstruction backward-warps the right image by `d_hat`,
//! `M_keep` backward-warps the complement of the hole mask (dropping pixels
//! whose support touches inpainted content), `valid` marks in-bounds warp
//! support, and `M_noc` drops ghosting at occlusions. High-confidence pixels
//! lean on the label; low-confidence pixels fall back to photometric
//! evidence at weight `mu`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::raster::{expect_same_dims, BinaryMask, ImagePlane, MapKind, ScalarMap};
use crate::warp::{backward_warp, backward_warp_mask};

/// SSIM stabilizers for unit dynamic range: `(0.01)^2` and `(0.03)^2`.
pub const SSIM_C1: f64 = 0.01 * 0.01;
pub const SSIM_C2: f64 = 0.03 * 0.03;

/// Weights and window for the loss stack.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct LossConfig {
    /// SSIM share of the photometric loss, in `[0, 1]`.
    pub beta: f64,
    /// Weight of the low-confidence photometric branch.
    pub mu: f64,
    /// Odd SSIM window edge length in pixels.
    pub ssim_window: usize,
    /// Divide the scalar loss by the count of mask-kept pixels instead of
    /// all pixels.
    pub mean_over_kept: bool,
}

impl Default for LossConfig {
    fn default() -> Self {
        Self {
            beta: 0.85,
            mu: 0.1,
            ssim_window: 3,
            mean_over_kept: false,
        }
    }
}

impl LossConfig {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.beta) {
            return Err(Error::InvalidConfig {
                detail: format!("beta = {} must lie in [0, 1]", self.beta),
            });
        }
        if self.mu.is_nan() || self.mu < 0.0 {
            return Err(Error::InvalidConfig {
                detail: format!("mu = {} must be non-negative", self.mu),
            });
        }
        if self.ssim_window == 0 || self.ssim_window.is_multiple_of(2) {
            return Err(Error::InvalidConfig {
                detail: format!("ssim_window = {} must be odd", self.ssim_window),
            });
        }
        Ok(())
    }
}

/// Per-pixel absolute disparity error `|d_hat - d|`.
pub fn l1_disparity(d_hat: &ScalarMap, d: &ScalarMap) -> Result<ScalarMap> {
    expect_same_dims("disparity L1", d_hat.dims(), d.dims())?;
    let (w, h) = d_hat.dims();
    let data = d_hat
        .data()
        .iter()
        .zip(d.data())
        .map(|(a, b)| (a - b).abs())
        .collect();
    ScalarMap::from_vec(w, h, MapKind::Value, data)
}

/// Per-pixel SSIM between two images, mean-pooled over an odd window
/// clipped at the borders, channel-averaged and clamped to `[-1, 1]`.
pub fn ssim(a: &ImagePlane, b: &ImagePlane, window: usize) -> Result<ScalarMap> {
    expect_same_dims("ssim", a.dims(), b.dims())?;
    let (w, h) = a.dims();
    if window == 0 || window.is_multiple_of(2) {
        return Err(Error::InvalidConfig {
            detail: format!("ssim window {window} must be odd"),
        });
    }
    if window > w || window > h {
        return Err(Error::InvalidConfig {
            detail: format!("ssim window {window} larger than image {w}x{h}"),
        });
    }
    let r = window / 2;
    let mut out = ScalarMap::new(w, h, MapKind::Value)?;
    for y in 0..h {
        let y0 = y.saturating_sub(r);
        let y1 = (y + r).min(h - 1);
        for x in 0..w {
            let x0 = x.saturating_sub(r);
            let x1 = (x + r).min(w - 1);
            let n = ((y1 - y0 + 1) * (x1 - x0 + 1)) as f64;
            let mut acc = 0.0;
            for c in 0..3 {
                let (mut sa, mut sb, mut saa, mut sbb, mut sab) = (0.0, 0.0, 0.0, 0.0, 0.0);
                for yy in y0..=y1 {
                    for xx in x0..=x1 {
                        let va = a.pixel(xx, yy)[c];
                        let vb = b.pixel(xx, yy)[c];
                        sa += va;
                        sb += vb;
                        saa += va * va;
                        sbb += vb * vb;
                        sab += va * vb;
                    }
                }
                let ma = sa / n;
                let mb = sb / n;
                let var_a = saa / n - ma * ma;
                let var_b = sbb / n - mb * mb;
                let cov = sab / n - ma * mb;
                acc += ((2.0 * ma * mb + SSIM_C1) * (2.0 * cov + SSIM_C2))
                    / ((ma * ma + mb * mb + SSIM_C1) * (var_a + var_b + SSIM_C2));
            }
            out.set(x, y, (acc / 3.0).clamp(-1.0, 1.0));
        }
    }
    Ok(out)
}

/// Photometric loss `beta * (1 - SSIM)/2 + (1 - beta) * |a - b|_1` per
/// pixel, with the L1 term averaged over channels.
pub fn photometric(a: &ImagePlane, b: &ImagePlane, cfg: &LossConfig) -> Result<ScalarMap> {
    cfg.validate()?;
    let mut out = ssim(a, b, cfg.ssim_window)?;
    let (w, h) = a.dims();
    for y in 0..h {
        for x in 0..w {
            let pa = a.pixel(x, y);
            let pb = b.pixel(x, y);
            let l1 = ((pa[0] - pb[0]).abs() + (pa[1] - pb[1]).abs() + (pa[2] - pb[2]).abs()) / 3.0;
            let s = out.get(x, y);
            out.set(x, y, cfg.beta * (1.0 - s) / 2.0 + (1.0 - cfg.beta) * l1);
        }
    }
    Ok(out)
}

/// Everything the photometric branch produces for one instance.
#[derive(Debug, Clone)]
pub struct PhotometricParts {
    /// Unmasked photometric loss between `left` and the reconstruction.
    pub photometric: ScalarMap,
    /// Masked loss: photometric * non-occlusion * hole-free support * valid.
    pub masked: ScalarMap,
    /// Backward-warp reconstruction of the left image.
    pub reconstruction: ImagePlane,
    /// In-bounds warp support.
    pub warp_valid: BinaryMask,
    /// Warped complement of the hole mask (1 = support avoids holes).
    pub hole_free: BinaryMask,
}

/// Computes the photometric branch: backward-warp the right image by
/// `d_hat`, compare against the left image, and mask out occlusions, pixels
/// whose support touches holes, and invalid support.
pub fn photometric_parts(
    left: &ImagePlane,
    right: &ImagePlane,
    d_hat: &ScalarMap,
    non_occluded: &BinaryMask,
    holes: &BinaryMask,
    cfg: &LossConfig,
) -> Result<PhotometricParts> {
    expect_same_dims("photometric branch", left.dims(), right.dims())?;
    expect_same_dims("photometric branch", left.dims(), d_hat.dims())?;
    expect_same_dims("photometric branch", left.dims(), non_occluded.dims())?;
    expect_same_dims("photometric branch", left.dims(), holes.dims())?;
    let (reconstruction, warp_valid) = backward_warp(right, d_hat)?;
    let hole_free = backward_warp_mask(&holes.invert(), d_hat)?;
    let lp = photometric(left, &reconstruction, cfg)?;
    let (w, h) = left.dims();
    let mut masked = ScalarMap::new(w, h, MapKind::Value)?;
    for y in 0..h {
        for x in 0..w {
            let m = (non_occluded.get(x, y) * hole_free.get(x, y) * warp_valid.get(x, y)) as f64;
            masked.set(x, y, m * lp.get(x, y));
        }
    }
    Ok(PhotometricParts {
        photometric: lp,
        masked,
        reconstruction,
        warp_valid,
        hole_free,
    })
}

/// Masked non-occlusion photometric loss map.
pub fn non_occlusion_photometric(
    left: &ImagePlane,
    right: &ImagePlane,
    d_hat: &ScalarMap,
    non_occluded: &BinaryMask,
    holes: &BinaryMask,
    cfg: &LossConfig,
) -> Result<ScalarMap> {
    Ok(photometric_parts(left, right, d_hat, non_occluded, holes, cfg)?.masked)
}

/// Pixel counts for every mask involved in one loss evaluation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct MaskCounts {
    pub total: usize,
    pub non_occluded: usize,
    pub holes: usize,
    pub warp_valid: usize,
    /// Pixels surviving the full photometric mask product.
    pub photometric_kept: usize,
}

/// All maps and the scalar from one loss evaluation.
#[derive(Debug, Clone)]
pub struct LossReport {
    pub disparity_l1: ScalarMap,
    pub photometric: ScalarMap,
    pub masked_photometric: ScalarMap,
    pub combined: ScalarMap,
    pub mean: f64,
    pub counts: MaskCounts,
}

/// Scalar part of a [`LossReport`], for structured output.
#[derive(Debug, Clone, Serialize)]
pub struct LossSummary {
    pub mean: f64,
    pub counts: MaskCounts,
}

impl LossReport {
    pub fn summary(&self) -> LossSummary {
        LossSummary {
            mean: self.mean,
            counts: self.counts,
        }
    }
}

/// Evaluates the full loss stack.
///
/// Per pixel: `C * L_d + mu * (1 - C) * L_np`. The scalar is the mean over
/// all pixels; with `mean_over_kept` it is instead the mean of the combined
/// map over pixels kept by the photometric mask product (zero if none
/// survive).
#[allow(clippy::too_many_arguments)]
pub fn evaluate(
    d_hat: &ScalarMap,
    d: &ScalarMap,
    confidence: &ScalarMap,
    left: &ImagePlane,
    right: &ImagePlane,
    non_occluded: &BinaryMask,
    holes: &BinaryMask,
    cfg: &LossConfig,
) -> Result<LossReport> {
    cfg.validate()?;
    expect_same_dims("loss", d_hat.dims(), confidence.dims())?;
    expect_same_dims("loss", d_hat.dims(), left.dims())?;
    if let Some(&v) = confidence.data().iter().find(|v| !(0.0..=1.0).contains(*v)) {
        return Err(Error::OutOfRange {
            context: "loss confidence",
            detail: format!("confidence must lie in [0, 1], found {v}"),
        });
    }

    let disparity_l1 = l1_disparity(d_hat, d)?;
    let parts = photometric_parts(left, right, d_hat, non_occluded, holes, cfg)?;

    let (w, h) = d_hat.dims();
    let mut combined = ScalarMap::new(w, h, MapKind::Value)?;
    let mut kept = 0usize;
    let mut sum_all = 0.0;
    let mut sum_kept = 0.0;
    for y in 0..h {
        for x in 0..w {
            let c = confidence.get(x, y);
            let v = c * disparity_l1.get(x, y) + cfg.mu * (1.0 - c) * parts.masked.get(x, y);
            combined.set(x, y, v);
            sum_all += v;
            let in_mask = non_occluded.is_set(x, y)
                && parts.hole_free.is_set(x, y)
                && parts.warp_valid.is_set(x, y);
            if in_mask {
                kept += 1;
                sum_kept += v;
            }
        }
    }
    let total = w * h;
    let mean = if cfg.mean_over_kept {
        if kept == 0 {
            log::warn!("no pixels survive the photometric masks; kept-mean is 0");
            0.0
        } else {
            sum_kept / kept as f64
        }
    } else {
        sum_all / total as f64
    };

    Ok(LossReport {
        disparity_l1,
        photometric: parts.photometric,
        masked_photometric: parts.masked,
        combined,
        mean,
        counts: MaskCounts {
            total,
            non_occluded: non_occluded.count_ones(),
            holes: holes.count_ones(),
            warp_valid: parts.warp_valid.count_ones(),
            photometric_kept: kept,
        },
    })
}
