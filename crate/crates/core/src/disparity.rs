//! Disparity synthesis: scale sampling over three bands, conversion from
//! normalized inverse depth, and dataset-level disparity statistics.
//!
//! The maximum disparity is expressed as a fraction `s` of the image width,
//! so the same configuration yields proportionate parallax at any
//! resolution. `s` is drawn from one of three uniform bands around a center
//! `c` with radius `r`:
//!
//! ```text
//! (c - 2r, c - r)   with probability p_small
//! (c - r,  c + r)   with probability p_center
//! (c + r,  c + 2r)  with probability p_large
//! ```
//!
//! Most draws stay in the well-behaved center band; the outer bands
//! occasionally inject small or large parallax to widen the training
//! distribution.

use std::collections::BTreeMap;
use std::path::PathBuf;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::io::read_pfm;
use crate::raster::{expect_unit_range, MapKind, ScalarMap};

/// Parameters of the three-band scale distribution.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ScaleConfig {
    /// Center of the distribution, as a fraction of image width.
    pub center: f64,
    /// Half-width of the center band.
    pub radius: f64,
    /// Probability of the small band `(c - 2r, c - r)`.
    pub p_small: f64,
    /// Probability of the center band `(c - r, c + r)`.
    pub p_center: f64,
    /// Probability of the large band `(c + r, c + 2r)`.
    pub p_large: f64,
}

impl Default for ScaleConfig {
    fn default() -> Self {
        Self {
            center: 0.1,
            radius: 0.05,
            p_small: 0.1,
            p_center: 0.8,
            p_large: 0.1,
        }
    }
}

impl ScaleConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |detail: String| Err(Error::InvalidConfig { detail });
        for (name, p) in [
            ("p_small", self.p_small),
            ("p_center", self.p_center),
            ("p_large", self.p_large),
        ] {
            if !(0.0..=1.0).contains(&p) {
                return bad(format!("{name} = {p} must lie in [0, 1]"));
            }
        }
        let sum = self.p_small + self.p_center + self.p_large;
        if (sum - 1.0).abs() > 1e-9 {
            return bad(format!("band probabilities sum to {sum}, expected 1"));
        }
        if self.radius.is_nan() || self.radius < 0.0 {
            return bad(format!("radius = {} must be non-negative", self.radius));
        }
        let scale_floor = self.center - 2.0 * self.radius;
        if scale_floor.is_nan() || scale_floor < 0.0 {
            return bad(format!(
                "center - 2*radius = {scale_floor} must be non-negative so the scale is never negative"
            ));
        }
        Ok(())
    }
}

/// Draws one scale factor from the three-band distribution.
///
/// Bands are half-open `[lo, hi)`. With `radius == 0` every band collapses
/// to the center point and no randomness is consumed. Deterministic given
/// the RNG state.
pub fn sample_scale<R: Rng + ?Sized>(cfg: &ScaleConfig, rng: &mut R) -> Result<f64> {
    cfg.validate()?;
    if cfg.radius == 0.0 {
        return Ok(cfg.center);
    }
    let band: f64 = rng.gen();
    let (lo, hi) = if band < cfg.p_small {
        (cfg.center - 2.0 * cfg.radius, cfg.center - cfg.radius)
    } else if band < cfg.p_small + cfg.p_center {
        (cfg.center - cfg.radius, cfg.center + cfg.radius)
    } else {
        (cfg.center + cfg.radius, cfg.center + 2.0 * cfg.radius)
    };
    Ok(rng.gen_range(lo..hi))
}

/// Converts normalized inverse depth to disparity: `d = depth * s * width`.
///
/// `width` is the width of the image the disparity will warp, in pixels.
/// The result is real-valued; discretization belongs to the warp stage.
pub fn disparity_from_depth(depth: &ScalarMap, s: f64, width: usize) -> Result<ScalarMap> {
    if s.is_nan() || s < 0.0 {
        return Err(Error::InvalidConfig {
            detail: format!("scale s = {s} must be non-negative"),
        });
    }
    expect_unit_range("disparity synthesis", depth)?;
    let factor = s * width as f64;
    let mut out = depth.retagged(MapKind::Disparity);
    for v in out.data_mut() {
        *v *= factor;
    }
    Ok(out)
}

/// One disparity map to fold into [`disparity_stats`], tagged with the
/// dataset it belongs to.
#[derive(Debug, Clone)]
pub struct StatsEntry {
    pub dataset: String,
    pub disparity_pfm: PathBuf,
}

/// Mean and maximum disparity over one dataset group.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GroupStats {
    pub dataset: String,
    pub maps: usize,
    pub pixels: u64,
    /// Average over every pixel of every map in the group.
    pub mean: f64,
    /// Global maximum over the group.
    pub max: f64,
}

/// Aggregates per-pixel disparity statistics, grouped by dataset tag.
///
/// Groups are returned in lexicographic dataset order.
pub fn disparity_stats(entries: &[StatsEntry]) -> Result<Vec<GroupStats>> {
    if entries.is_empty() {
        return Err(Error::EmptyManifest);
    }
    #[derive(Default)]
    struct Acc {
        maps: usize,
        pixels: u64,
        sum: f64,
        max: f64,
    }
    let mut groups: BTreeMap<&str, Acc> = BTreeMap::new();
    for entry in entries {
        let map = read_pfm(&entry.disparity_pfm, MapKind::Disparity)?;
        let acc = groups.entry(entry.dataset.as_str()).or_default();
        acc.maps += 1;
        acc.pixels += map.data().len() as u64;
        acc.sum += map.data().iter().sum::<f64>();
        acc.max = acc.max.max(map.min_max().1);
    }
    Ok(groups
        .into_iter()
        .map(|(dataset, acc)| GroupStats {
            dataset: dataset.to_string(),
            maps: acc.maps,
            pixels: acc.pixels,
            mean: acc.sum / acc.pixels as f64,
            max: acc.max,
        })
        .collect())
}
