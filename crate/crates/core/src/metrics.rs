//! Stereo evaluation metrics: end-point error and bad-pixel percentage.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::raster::{expect_same_dims, BinaryMask, ScalarMap};

#[cfg(test)]
use crate::raster::MapKind;

/// Mean absolute disparity error over valid pixels, in pixels.
pub fn epe(d_hat: &ScalarMap, d_gt: &ScalarMap, valid: &BinaryMask) -> Result<f64> {
    expect_same_dims("epe", d_hat.dims(), d_gt.dims())?;
    expect_same_dims("epe", d_hat.dims(), valid.dims())?;
    let mut sum = 0.0;
    let mut n = 0usize;
    for ((a, b), v) in d_hat.data().iter().zip(d_gt.data()).zip(valid.data()) {
        if *v == 1 {
            sum += (a - b).abs();
            n += 1;
        }
    }
    if n == 0 {
        return Err(Error::EmptyValidMask { context: "epe" });
    }
    Ok(sum / n as f64)
}

/// Percentage of valid pixels whose absolute error strictly exceeds `tau`.
pub fn bad_tau(d_hat: &ScalarMap, d_gt: &ScalarMap, valid: &BinaryMask, tau: f64) -> Result<f64> {
    expect_same_dims("bad_tau", d_hat.dims(), d_gt.dims())?;
    expect_same_dims("bad_tau", d_hat.dims(), valid.dims())?;
    let mut bad = 0usize;
    let mut n = 0usize;
    for ((a, b), v) in d_hat.data().iter().zip(d_gt.data()).zip(valid.data()) {
        if *v == 1 {
            n += 1;
            if (a - b).abs() > tau {
                bad += 1;
            }
        }
    }
    if n == 0 {
        return Err(Error::EmptyValidMask { context: "bad_tau" });
    }
    Ok(100.0 * bad as f64 / n as f64)
}

/// Mask of pixels whose ground-truth disparity is strictly below `cap`;
/// AND it with a validity mask to evaluate a restricted disparity range.
pub fn disparity_cap_mask(d_gt: &ScalarMap, cap: f64) -> BinaryMask {
    let (w, h) = d_gt.dims();
    let data = d_gt.data().iter().map(|&v| (v < cap) as u8).collect();
    BinaryMask::from_vec(w, h, data).expect("same dims as input")
}

/// Metrics for one disparity pair.
#[derive(Debug, Clone, Serialize)]
pub struct PairMetrics {
    pub epe: f64,
    /// `(tau, percentage)` in the order requested.
    pub bad: Vec<(f64, f64)>,
    pub valid_pixels: usize,
}

/// Evaluates EPE and a sweep of bad-tau thresholds in one pass.
pub fn evaluate_pair(
    d_hat: &ScalarMap,
    d_gt: &ScalarMap,
    valid: &BinaryMask,
    taus: &[f64],
) -> Result<PairMetrics> {
    let epe = epe(d_hat, d_gt, valid)?;
    let mut bad = Vec::with_capacity(taus.len());
    for &tau in taus {
        bad.push((tau, bad_tau(d_hat, d_gt, valid, tau)?));
    }
    Ok(PairMetrics {
        epe,
        bad,
        valid_pixels: valid.count_ones(),
    })
}
