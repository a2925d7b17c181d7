//! Disparity conditioning and image warping.
//!
//! Synthesizing a right view from a left image and per-pixel disparity takes
//! four steps here:
//!
//! 1. [`sharpen_disparity`] removes "flying" ramp pixels that straddle depth
//!    discontinuities, so object edges move as a unit.
//! 2. [`dilate_disparity`] inflates the disparity with a windowed maximum,
//!    pulling a margin of background along with each foreground object.
//! 3. [`forward_warp`] splats every source pixel to `x' = round(x - d)`,
//!    resolving collisions in favor of the nearest surface (largest
//!    disparity) and reporting both visibility and hole masks.
//! 4. [`backward_warp`] gathers colors from the synthesized view by sampling
//!    at `x - d` with horizontal linear interpolation, for photometric
//!    reconstruction checks.
//!
//! Coordinate conventions: the warped image and the hole mask live on the
//! right-image grid; the non-occlusion mask lives on the left-image grid
//! (it marks which *source* pixels stayed visible).

use crate::error::{Error, Result};
use crate::raster::{expect_same_dims, BinaryMask, ImagePlane, MapKind, ScalarMap};

/// Result of [`forward_warp`].
#[derive(Debug, Clone)]
pub struct ForwardWarp {
    /// Synthesized right view; hole pixels are black.
    pub warped: ImagePlane,
    /// Left-frame mask: 1 where the source pixel won its target cell inside
    /// the image, 0 where it was occluded by a larger disparity or warped
    /// out of bounds.
    pub non_occluded: BinaryMask,
    /// Right-frame mask: 1 where no source pixel landed (needs inpainting).
    pub holes: BinaryMask,
}

fn round_half_up(v: f64) -> f64 {
    (v + 0.5).floor()
}

fn expect_disparity(context: &'static str, d: &ScalarMap) -> Result<()> {
    if d.kind() != MapKind::Disparity {
        return Err(Error::KindMismatch {
            context,
            expected: MapKind::Disparity.name(),
            actual: d.kind().name(),
        });
    }
    Ok(())
}

fn expect_non_negative(context: &'static str, d: &ScalarMap) -> Result<()> {
    if let Some(&v) = d.data().iter().find(|&&v| v.is_nan() || v < 0.0) {
        return Err(Error::OutOfRange {
            context,
            detail: format!("disparity must be non-negative, found {v}"),
        });
    }
    Ok(())
}

/// Horizontal gradient magnitude from the 3x3 Sobel kernel, normalized to
/// px/px (divided by 8), with border samples clamped.
fn horizontal_sobel(d: &ScalarMap, x: usize, y: usize) -> f64 {
    let (w, h) = d.dims();
    let cl = |v: isize, hi: usize| v.clamp(0, hi as isize - 1) as usize;
    let mut acc = 0.0;
    for (k, weight) in [(-1isize, 1.0), (0, 2.0), (1, 1.0)] {
        let yy = cl(y as isize + k, h);
        let right = d.get(cl(x as isize + 1, w), yy);
        let left = d.get(cl(x as isize - 1, w), yy);
        acc += weight * (right - left);
    }
    (acc / 8.0).abs()
}

/// Replaces "flying" pixels - interpolated ramp samples at depth
/// discontinuities - with the nearest stable disparity in the same row.
///
/// A pixel is flying when its horizontal Sobel magnitude exceeds
/// `grad_thresh` (px/px). The nearer stable side wins; ties take the left
/// neighbor, continuing the background for a camera translating right.
/// A row with no stable pixel is left unchanged with a warning.
pub fn sharpen_disparity(d: &ScalarMap, grad_thresh: f64) -> Result<ScalarMap> {
    expect_disparity("sharpen", d)?;
    let (w, h) = d.dims();
    let mut out = d.clone();
    let mut flying = vec![false; w];
    for y in 0..h {
        let mut any_stable = false;
        for (x, f) in flying.iter_mut().enumerate() {
            *f = horizontal_sobel(d, x, y) > grad_thresh;
            any_stable |= !*f;
        }
        if !any_stable {
            log::warn!("row {y}: every pixel exceeds the gradient threshold; left unchanged");
            continue;
        }
        for x in 0..w {
            if !flying[x] {
                continue;
            }
            let left = (0..x).rev().find(|&i| !flying[i]);
            let right = (x + 1..w).find(|&i| !flying[i]);
            let source = match (left, right) {
                (Some(l), Some(r)) => {
                    if x - l <= r - x {
                        l
                    } else {
                        r
                    }
                }
                (Some(l), None) => l,
                (None, Some(r)) => r,
                (None, None) => unreachable!("any_stable checked above"),
            };
            out.set(x, y, d.get(source, y));
        }
    }
    Ok(out)
}

/// Grayscale morphological dilation: windowed maximum over an odd square
/// kernel, clipped at the borders. `kernel == 1` is the identity.
pub fn dilate_disparity(d: &ScalarMap, kernel: usize) -> Result<ScalarMap> {
    if kernel == 0 || kernel.is_multiple_of(2) {
        return Err(Error::InvalidConfig {
            detail: format!("dilation kernel must be odd and at least 1, got {kernel}"),
        });
    }
    let (w, h) = d.dims();
    let r = kernel / 2;
    let mut out = d.clone();
    for y in 0..h {
        let y0 = y.saturating_sub(r);
        let y1 = (y + r).min(h - 1);
        for x in 0..w {
            let x0 = x.saturating_sub(r);
            let x1 = (x + r).min(w - 1);
            let mut best = f64::NEG_INFINITY;
            for yy in y0..=y1 {
                for xx in x0..=x1 {
                    best = best.max(d.get(xx, yy));
                }
            }
            out.set(x, y, best);
        }
    }
    Ok(out)
}

/// Splats every left pixel to `x' = round_half_up(x - d)`, keeping the
/// largest-disparity contributor per target cell (nearest surface). Ties
/// between equal disparities go to the rightmost source so the result does
/// not depend on traversal order.
pub fn forward_warp(image: &ImagePlane, d: &ScalarMap) -> Result<ForwardWarp> {
    expect_same_dims("forward warp", image.dims(), d.dims())?;
    expect_non_negative("forward warp", d)?;
    let (w, h) = image.dims();
    let mut warped = ImagePlane::new(w, h)?;
    let mut non_occluded = BinaryMask::new(w, h)?;
    let mut holes = BinaryMask::new(w, h)?;

    let mut winner: Vec<Option<usize>> = vec![None; w];
    let mut winner_disp = vec![0.0f64; w];
    for y in 0..h {
        winner.iter_mut().for_each(|v| *v = None);
        for x in 0..w {
            let disp = d.get(x, y);
            let tx = round_half_up(x as f64 - disp);
            if tx < 0.0 || tx >= w as f64 {
                continue; // warped out of bounds; stays occluded in the mask
            }
            let tx = tx as usize;
            if winner[tx].is_none() || disp >= winner_disp[tx] {
                winner[tx] = Some(x);
                winner_disp[tx] = disp;
            }
        }
        for (tx, win) in winner.iter().enumerate() {
            match *win {
                Some(sx) => {
                    warped.set_pixel(tx, y, image.pixel(sx, y));
                    non_occluded.set(sx, y, 1);
                }
                None => holes.set(tx, y, 1),
            }
        }
    }
    Ok(ForwardWarp {
        warped,
        non_occluded,
        holes,
    })
}

/// Horizontal linear-interpolation support of coordinate `sx` in a row of
/// `width` columns. `None` when any support column falls outside the image
/// (a non-finite coordinate counts as outside). At integer coordinates the
/// support is the single column.
fn support(width: usize, sx: f64) -> Option<(usize, usize, f64)> {
    if !sx.is_finite() {
        return None;
    }
    let x0 = sx.floor();
    if x0 < 0.0 {
        return None;
    }
    let frac = sx - x0;
    let x0 = x0 as usize;
    if frac == 0.0 {
        (x0 < width).then_some((x0, x0, 0.0))
    } else {
        (x0 + 1 < width).then_some((x0, x0 + 1, frac))
    }
}

/// Gathers `image` at `(x - d(x, y), y)` with horizontal linear
/// interpolation.
///
/// Returns the reconstruction and a validity mask that is 1 only where the
/// whole interpolation support lies inside the image; pixels sampled outside
/// are black and invalid. Integer disparities reduce to an exact column
/// shift.
pub fn backward_warp(image: &ImagePlane, d: &ScalarMap) -> Result<(ImagePlane, BinaryMask)> {
    expect_same_dims("backward warp", image.dims(), d.dims())?;
    let (w, h) = image.dims();
    let mut out = ImagePlane::new(w, h)?;
    let mut valid = BinaryMask::new(w, h)?;
    for y in 0..h {
        for x in 0..w {
            let sx = x as f64 - d.get(x, y);
            if let Some((x0, x1, frac)) = support(w, sx) {
                valid.set(x, y, 1);
                let px = if frac == 0.0 {
                    image.pixel(x0, y)
                } else {
                    let a = image.pixel(x0, y);
                    let b = image.pixel(x1, y);
                    [
                        a[0] + frac * (b[0] - a[0]),
                        a[1] + frac * (b[1] - a[1]),
                        a[2] + frac * (b[2] - a[2]),
                    ]
                };
                out.set_pixel(x, y, px);
            }
        }
    }
    Ok((out, valid))
}

/// Backward warps a binary mask and re-binarizes conservatively: a target
/// pixel stays 1 only if its whole interpolation support is 1 (interpolated
/// value at least `1 - 1e-6`). Out-of-support pixels become 0.
pub fn backward_warp_mask(mask: &BinaryMask, d: &ScalarMap) -> Result<BinaryMask> {
    expect_same_dims("backward warp mask", mask.dims(), d.dims())?;
    let (w, h) = mask.dims();
    let mut out = BinaryMask::new(w, h)?;
    for y in 0..h {
        for x in 0..w {
            let sx = x as f64 - d.get(x, y);
            if let Some((x0, x1, frac)) = support(w, sx) {
                let a = mask.get(x0, y) as f64;
                let b = mask.get(x1, y) as f64;
                let v = a + frac * (b - a);
                if v >= 1.0 - 1e-6 {
                    out.set(x, y, 1);
                }
            }
        }
    }
    Ok(out)
}
