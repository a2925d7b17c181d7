//! Core raster types shared by the whole pipeline.
//!
//! All rasters are row-major, top-down, with `f64` samples in memory.
//! Color images keep channel values in `[0, 1]`; binary masks hold exactly
//! `0` or `1`. Every type is an immutable value object once constructed, so
//! they can be shared freely across worker threads.

use crate::error::{Error, Result};

/// Semantic tag for a [`ScalarMap`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MapKind {
    /// Relative inverse depth; `[0, 1]` once normalized.
    InverseDepth,
    /// Horizontal pixel offset; non-negative.
    Disparity,
    /// Per-pixel label reliability; `[0, 1]`.
    Confidence,
    /// Untyped per-pixel quantity (loss terms, similarity scores).
    Value,
}

impl MapKind {
    pub fn name(self) -> &'static str {
        match self {
            MapKind::InverseDepth => "inverse_depth",
            MapKind::Disparity => "disparity",
            MapKind::Confidence => "confidence",
            MapKind::Value => "value",
        }
    }
}

fn check_dims(width: usize, height: usize) -> Result<()> {
    if width == 0 || height == 0 {
        return Err(Error::InvalidRaster {
            detail: format!("dimensions must be at least 1x1, got {width}x{height}"),
        });
    }
    Ok(())
}

/// Checks that two rasters share dimensions, for use at operation entry.
pub(crate) fn expect_same_dims(
    context: &'static str,
    (ew, eh): (usize, usize),
    (aw, ah): (usize, usize),
) -> Result<()> {
    if (ew, eh) != (aw, ah) {
        return Err(Error::DimensionMismatch {
            context,
            expected_width: ew,
            expected_height: eh,
            actual_width: aw,
            actual_height: ah,
        });
    }
    Ok(())
}

/// Checks that every sample lies in `[0, 1]`.
pub(crate) fn expect_unit_range(context: &'static str, map: &ScalarMap) -> Result<()> {
    if let Some(&v) = map.data().iter().find(|v| !(0.0..=1.0).contains(*v)) {
        return Err(Error::OutOfRange {
            context,
            detail: format!("expected values in [0, 1], found {v}"),
        });
    }
    Ok(())
}

/// An RGB color image with channel values in `[0, 1]`.
///
/// Samples are stored interleaved (`r g b r g b ...`), row-major, top-down.
#[derive(Debug, Clone, PartialEq)]
pub struct ImagePlane {
    width: usize,
    height: usize,
    data: Vec<f64>,
}

impl ImagePlane {
    /// An all-black image.
    pub fn new(width: usize, height: usize) -> Result<Self> {
        check_dims(width, height)?;
        Ok(Self {
            width,
            height,
            data: vec![0.0; width * height * 3],
        })
    }

    /// Wraps interleaved RGB data, validating length and the `[0, 1]` range.
    pub fn from_vec(width: usize, height: usize, data: Vec<f64>) -> Result<Self> {
        check_dims(width, height)?;
        if data.len() != width * height * 3 {
            return Err(Error::InvalidRaster {
                detail: format!(
                    "expected {} samples for {width}x{height} RGB, got {}",
                    width * height * 3,
                    data.len()
                ),
            });
        }
        if let Some(i) = data.iter().position(|v| !(0.0..=1.0).contains(v)) {
            return Err(Error::InvalidRaster {
                detail: format!("channel value {} at index {i} outside [0, 1]", data[i]),
            });
        }
        Ok(Self {
            width,
            height,
            data,
        })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.width, self.height)
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    #[inline]
    pub fn pixel(&self, x: usize, y: usize) -> [f64; 3] {
        let i = (y * self.width + x) * 3;
        [self.data[i], self.data[i + 1], self.data[i + 2]]
    }

    #[inline]
    pub fn set_pixel(&mut self, x: usize, y: usize, rgb: [f64; 3]) {
        let i = (y * self.width + x) * 3;
        self.data[i] = rgb[0];
        self.data[i + 1] = rgb[1];
        self.data[i + 2] = rgb[2];
    }

    /// Mirrors the image left-right. Involution: flipping twice is identity.
    pub fn hflip(&self) -> Self {
        let mut out = self.clone();
        for y in 0..self.height {
            for x in 0..self.width {
                out.set_pixel(self.width - 1 - x, y, self.pixel(x, y));
            }
        }
        out
    }
}

/// A single-channel scalar field with a semantic [`MapKind`] tag.
#[derive(Debug, Clone, PartialEq)]
pub struct ScalarMap {
    width: usize,
    height: usize,
    kind: MapKind,
    data: Vec<f64>,
}

impl ScalarMap {
    /// An all-zero map.
    pub fn new(width: usize, height: usize, kind: MapKind) -> Result<Self> {
        check_dims(width, height)?;
        Ok(Self {
            width,
            height,
            kind,
            data: vec![0.0; width * height],
        })
    }

    /// Wraps row-major data, validating only the length.
    ///
    /// Range invariants (`[0, 1]` for normalized inverse depth and
    /// confidence, non-negativity for disparity) are enforced by the
    /// operations that produce such maps, not at construction: raw model
    /// outputs arrive unnormalized.
    pub fn from_vec(width: usize, height: usize, kind: MapKind, data: Vec<f64>) -> Result<Self> {
        check_dims(width, height)?;
        if data.len() != width * height {
            return Err(Error::InvalidRaster {
                detail: format!(
                    "expected {} samples for {width}x{height} map, got {}",
                    width * height,
                    data.len()
                ),
            });
        }
        Ok(Self {
            width,
            height,
            kind,
            data,
        })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.width, self.height)
    }

    pub fn kind(&self) -> MapKind {
        self.kind
    }

    /// Returns a copy tagged with a different kind.
    pub fn retagged(&self, kind: MapKind) -> Self {
        Self {
            kind,
            ..self.clone()
        }
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub(crate) fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> f64 {
        self.data[y * self.width + x]
    }

    #[inline]
    pub fn set(&mut self, x: usize, y: usize, v: f64) {
        self.data[y * self.width + x] = v;
    }

    /// `(min, max)` over all samples. Meaningless on NaN data; callers that
    /// care validate finiteness first.
    pub fn min_max(&self) -> (f64, f64) {
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for &v in &self.data {
            if v < lo {
                lo = v;
            }
            if v > hi {
                hi = v;
            }
        }
        (lo, hi)
    }

    /// Index of the first non-finite sample, if any.
    pub fn first_non_finite(&self) -> Option<usize> {
        self.data.iter().position(|v| !v.is_finite())
    }

    /// Mirrors the map left-right.
    pub fn hflip(&self) -> Self {
        let mut out = self.clone();
        for y in 0..self.height {
            for x in 0..self.width {
                out.set(self.width - 1 - x, y, self.get(x, y));
            }
        }
        out
    }

    /// Resamples to `width x height` with bilinear interpolation.
    ///
    /// Uses the pixel-center convention: output pixel `x` samples input
    /// coordinate `(x + 0.5) * w_in / w_out - 0.5`, clamped at the borders.
    /// Identity when the dimensions already match.
    pub fn resize_bilinear(&self, width: usize, height: usize) -> Result<Self> {
        check_dims(width, height)?;
        if (width, height) == (self.width, self.height) {
            return Ok(self.clone());
        }
        let mut out = ScalarMap::new(width, height, self.kind)?;
        let sx = self.width as f64 / width as f64;
        let sy = self.height as f64 / height as f64;
        for y in 0..height {
            let fy = ((y as f64 + 0.5) * sy - 0.5).clamp(0.0, (self.height - 1) as f64);
            let y0 = fy.floor() as usize;
            let y1 = (y0 + 1).min(self.height - 1);
            let wy = fy - y0 as f64;
            for x in 0..width {
                let fx = ((x as f64 + 0.5) * sx - 0.5).clamp(0.0, (self.width - 1) as f64);
                let x0 = fx.floor() as usize;
                let x1 = (x0 + 1).min(self.width - 1);
                let wx = fx - x0 as f64;
                let top = self.get(x0, y0) * (1.0 - wx) + self.get(x1, y0) * wx;
                let bot = self.get(x0, y1) * (1.0 - wx) + self.get(x1, y1) * wx;
                out.set(x, y, top * (1.0 - wy) + bot * wy);
            }
        }
        Ok(out)
    }
}

/// An `H x W` field of `{0, 1}` values.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BinaryMask {
    width: usize,
    height: usize,
    data: Vec<u8>,
}

impl BinaryMask {
    /// An all-zero mask.
    pub fn new(width: usize, height: usize) -> Result<Self> {
        check_dims(width, height)?;
        Ok(Self {
            width,
            height,
            data: vec![0; width * height],
        })
    }

    /// An all-one mask.
    pub fn ones(width: usize, height: usize) -> Result<Self> {
        check_dims(width, height)?;
        Ok(Self {
            width,
            height,
            data: vec![1; width * height],
        })
    }

    /// Wraps row-major data, validating that every value is 0 or 1.
    pub fn from_vec(width: usize, height: usize, data: Vec<u8>) -> Result<Self> {
        check_dims(width, height)?;
        if data.len() != width * height {
            return Err(Error::InvalidRaster {
                detail: format!(
                    "expected {} samples for {width}x{height} mask, got {}",
                    width * height,
                    data.len()
                ),
            });
        }
        if let Some(i) = data.iter().position(|&v| v > 1) {
            return Err(Error::InvalidRaster {
                detail: format!("mask value {} at index {i} is not 0 or 1", data[i]),
            });
        }
        Ok(Self {
            width,
            height,
            data,
        })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.width, self.height)
    }

    pub fn data(&self) -> &[u8] {
        &self.data
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> u8 {
        self.data[y * self.width + x]
    }

    #[inline]
    pub fn is_set(&self, x: usize, y: usize) -> bool {
        self.get(x, y) == 1
    }

    #[inline]
    pub fn set(&mut self, x: usize, y: usize, v: u8) {
        debug_assert!(v <= 1);
        self.data[y * self.width + x] = v;
    }

    pub fn count_ones(&self) -> usize {
        self.data.iter().filter(|&&v| v == 1).count()
    }

    /// Mirrors the mask left-right.
    pub fn hflip(&self) -> Self {
        let mut out = self.clone();
        for y in 0..self.height {
            for x in 0..self.width {
                out.set(self.width - 1 - x, y, self.get(x, y));
            }
        }
        out
    }

    /// Pixel-wise logical AND.
    pub fn and(&self, other: &BinaryMask) -> Result<BinaryMask> {
        expect_same_dims("mask and", self.dims(), other.dims())?;
        let data = self
            .data
            .iter()
            .zip(&other.data)
            .map(|(&a, &b)| a & b)
            .collect();
        Ok(BinaryMask {
            width: self.width,
            height: self.height,
            data,
        })
    }

    /// Pixel-wise complement (`1 - m`).
    pub fn invert(&self) -> BinaryMask {
        BinaryMask {
            width: self.width,
            height: self.height,
            data: self.data.iter().map(|&v| 1 - v).collect(),
        }
    }

    /// View as a scalar field of 0.0 / 1.0, tagged with `kind`.
    pub fn to_scalar(&self, kind: MapKind) -> ScalarMap {
        ScalarMap {
            width: self.width,
            height: self.height,
            kind,
            data: self.data.iter().map(|&v| v as f64).collect(),
        }
    }
}
