//! Normalization of monocular inverse-depth predictions and confidence from
//! horizontal flip consistency.
//!
//! Relative inverse depth is invariant under a horizontal flip of the input
//! image: where a model's prediction for the mirrored image disagrees with
//! the mirror of its prediction for the original, the label is unreliable.
//! That disagreement, min-max normalized per image, is the confidence map.

use crate::error::{Error, Result};
use crate::raster::{expect_same_dims, expect_unit_range, MapKind, ScalarMap};

/// Min-max normalizes a raw inverse-depth map to `[0, 1]`.
///
/// A constant map normalizes to all zeros: it carries no parallax signal,
/// and downstream disparity synthesis turns it into zero disparity.
pub fn normalize_inverse_depth(raw: &ScalarMap) -> Result<ScalarMap> {
    if let Some(index) = raw.first_non_finite() {
        return Err(Error::NonFinite {
            context: "inverse depth input",
            index,
        });
    }
    let (lo, hi) = raw.min_max();
    let mut out = raw.retagged(MapKind::InverseDepth);
    if lo == hi {
        log::warn!("constant depth map normalizes to all zeros (no parallax signal)");
        out.data_mut().fill(0.0);
        return Ok(out);
    }
    let span = hi - lo;
    for v in out.data_mut() {
        *v = (*v - lo) / span;
    }
    Ok(out)
}

/// Confidence of a normalized inverse-depth map from flip consistency.
///
/// `depth` is the normalized prediction for the image; `depth_of_flipped`
/// is the normalized prediction for the horizontally mirrored image (a
/// separate model pass, not a flip of `depth`). Per-pixel agreement is
///
/// ```text
/// u = 1 - |depth - hflip(depth_of_flipped)|
/// ```
///
/// and the confidence is `(u - min u) / (max u - min u)`. When `u` is
/// constant the predictions agree uniformly and the confidence is all ones;
/// anything else attains both 0 and 1.
pub fn flip_consistency_confidence(
    depth: &ScalarMap,
    depth_of_flipped: &ScalarMap,
) -> Result<ScalarMap> {
    expect_same_dims(
        "flip-consistency confidence",
        depth.dims(),
        depth_of_flipped.dims(),
    )?;
    expect_unit_range("flip-consistency confidence (depth)", depth)?;
    expect_unit_range(
        "flip-consistency confidence (depth of flipped image)",
        depth_of_flipped,
    )?;

    let unflipped = depth_of_flipped.hflip();
    let mut u = depth.retagged(MapKind::Confidence);
    for (v, (&a, &b)) in u
        .data_mut()
        .iter_mut()
        .zip(depth.data().iter().zip(unflipped.data()))
    {
        *v = 1.0 - (a - b).abs();
    }

    let (lo, hi) = u.min_max();
    if lo == hi {
        u.data_mut().fill(1.0);
        return Ok(u);
    }
    let span = hi - lo;
    for v in u.data_mut() {
        *v = (*v - lo) / span;
    }
    Ok(u)
}
