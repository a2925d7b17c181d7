//! Hole filling for forward-warped images.
//!
//! Forward warping leaves holes where background was revealed. Three
//! backends fill them:
//!
//! - [`neighbor_fill`]: continue the background from the left, the side the
//!   revealed surface belongs to under a rightward camera shift;
//! - [`random_background_fill`]: paste a randomly shifted tiling of a
//!   texture image into the holes;
//! - [`composite_external`]: splice in an externally produced inpainting
//!   result, pixel-exact outside the holes.
//!
//! Every backend leaves non-hole pixels bit-identical to the input.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::raster::{expect_same_dims, BinaryMask, ImagePlane};

/// Which hole-filling strategy a pipeline run uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BackendKind {
    NeighborFill,
    RandomBackground,
    External,
}

impl BackendKind {
    pub fn name(self) -> &'static str {
        match self {
            BackendKind::NeighborFill => "neighbor_fill",
            BackendKind::RandomBackground => "random_background",
            BackendKind::External => "external",
        }
    }
}

/// Fills each hole with the nearest non-hole pixel to its left in the same
/// row; holes before the first non-hole pixel take the nearest one to the
/// right. A fully-hole row becomes black with a warning.
pub fn neighbor_fill(warped: &ImagePlane, holes: &BinaryMask) -> Result<ImagePlane> {
    expect_same_dims("neighbor fill", warped.dims(), holes.dims())?;
    let (w, h) = warped.dims();
    let mut out = warped.clone();
    for y in 0..h {
        let mut last: Option<[f64; 3]> = None;
        let mut leading_holes = 0usize;
        for x in 0..w {
            if holes.is_set(x, y) {
                match last {
                    Some(px) => out.set_pixel(x, y, px),
                    None => leading_holes += 1,
                }
            } else {
                let px = warped.pixel(x, y);
                if last.is_none() && leading_holes > 0 {
                    for xx in 0..leading_holes {
                        out.set_pixel(xx, y, px);
                    }
                }
                last = Some(px);
            }
        }
        if last.is_none() {
            log::warn!("row {y} is entirely holes; filled with black");
            for x in 0..w {
                out.set_pixel(x, y, [0.0; 3]);
            }
        }
    }
    Ok(out)
}

/// Fills holes from a randomly offset tiling of `texture`.
///
/// One offset is drawn per image, so the pasted background is coherent;
/// hole `(x, y)` takes `texture((ox + x) mod tw, (oy + y) mod th)`.
/// Deterministic given the RNG state.
pub fn random_background_fill<R: Rng + ?Sized>(
    warped: &ImagePlane,
    holes: &BinaryMask,
    texture: &ImagePlane,
    rng: &mut R,
) -> Result<ImagePlane> {
    expect_same_dims("random background fill", warped.dims(), holes.dims())?;
    let (w, h) = warped.dims();
    let (tw, th) = texture.dims();
    let ox = rng.gen_range(0..tw);
    let oy = rng.gen_range(0..th);
    let mut out = warped.clone();
    for y in 0..h {
        for x in 0..w {
            if holes.is_set(x, y) {
                out.set_pixel(x, y, texture.pixel((ox + x) % tw, (oy + y) % th));
            }
        }
    }
    Ok(out)
}

/// Splices an externally inpainted image into the holes:
/// `out = holes * external + (1 - holes) * warped`, selected per pixel so
/// non-hole pixels stay bit-identical to `warped`.
pub fn composite_external(
    warped: &ImagePlane,
    holes: &BinaryMask,
    external: &ImagePlane,
) -> Result<ImagePlane> {
    expect_same_dims("composite (mask)", warped.dims(), holes.dims())?;
    expect_same_dims("composite (external)", warped.dims(), external.dims())?;
    let (w, h) = warped.dims();
    let mut out = warped.clone();
    for y in 0..h {
        for x in 0..w {
            if holes.is_set(x, y) {
                out.set_pixel(x, y, external.pixel(x, y));
            }
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha12Rng;

    fn solid(w: usize, h: usize, v: f64) -> ImagePlane {
        ImagePlane::from_vec(w, h, vec![v; w * h * 3]).unwrap()
    }

    #[test]
    fn no_holes_no_change() {
        let img = solid(3, 2, 0.4);
        let none = BinaryMask::new(3, 2).unwrap();
        assert_eq!(neighbor_fill(&img, &none).unwrap(), img);
        let mut rng = ChaCha12Rng::seed_from_u64(0);
        assert_eq!(
            random_background_fill(&img, &none, &solid(2, 2, 0.9), &mut rng).unwrap(),
            img
        );
        assert_eq!(
            composite_external(&img, &none, &solid(3, 2, 0.9)).unwrap(),
            img
        );
    }

    #[test]
    fn neighbor_fill_prefers_left() {
        // Row colors [a, hole, hole, b] -> [a, a, a, b].
        let mut img = solid(4, 1, 0.0);
        img.set_pixel(0, 0, [0.2; 3]);
        img.set_pixel(3, 0, [0.8; 3]);
        let holes = BinaryMask::from_vec(4, 1, vec![0, 1, 1, 0]).unwrap();
        let out = neighbor_fill(&img, &holes).unwrap();
        assert_eq!(out.pixel(0, 0), [0.2; 3]);
        assert_eq!(out.pixel(1, 0), [0.2; 3]);
        assert_eq!(out.pixel(2, 0), [0.2; 3]);
        assert_eq!(out.pixel(3, 0), [0.8; 3]);
    }

    #[test]
    fn neighbor_fill_leading_holes_take_right() {
        let mut img = solid(3, 1, 0.0);
        img.set_pixel(2, 0, [0.6; 3]);
        let holes = BinaryMask::from_vec(3, 1, vec![1, 1, 0]).unwrap();
        let out = neighbor_fill(&img, &holes).unwrap();
        assert_eq!(out.pixel(0, 0), [0.6; 3]);
        assert_eq!(out.pixel(1, 0), [0.6; 3]);
    }

    #[test]
    fn neighbor_fill_all_hole_row_black() {
        let img = solid(3, 2, 0.7);
        let holes = BinaryMask::from_vec(3, 2, vec![1, 1, 1, 0, 0, 0]).unwrap();
        let out = neighbor_fill(&img, &holes).unwrap();
        for x in 0..3 {
            assert_eq!(out.pixel(x, 0), [0.0; 3]);
            assert_eq!(out.pixel(x, 1), [0.7; 3]);
        }
    }

    #[test]
    fn neighbor_fill_uses_only_existing_colors() {
        let mut rng = ChaCha12Rng::seed_from_u64(21);
        for _ in 0..50 {
            let data: Vec<f64> = (0..8 * 4 * 3).map(|_| rng.gen_range(0.0..=1.0)).collect();
            let img = ImagePlane::from_vec(8, 4, data).unwrap();
            let mask: Vec<u8> = (0..32).map(|_| rng.gen_range(0..2) as u8).collect();
            let holes = BinaryMask::from_vec(8, 4, mask).unwrap();
            let out = neighbor_fill(&img, &holes).unwrap();
            let palette: Vec<[f64; 3]> = (0..4)
                .flat_map(|y| (0..8).map(move |x| (x, y)))
                .filter(|&(x, y)| !holes.is_set(x, y))
                .map(|(x, y)| img.pixel(x, y))
                .collect();
            for y in 0..4 {
                for x in 0..8 {
                    let px = out.pixel(x, y);
                    assert!(palette.contains(&px) || px == [0.0; 3]);
                }
            }
        }
    }

    #[test]
    fn random_fill_full_mask_is_texture_tiling() {
        let mut tex = solid(2, 1, 0.0);
        tex.set_pixel(1, 0, [1.0; 3]);
        let img = solid(4, 1, 0.3);
        let all = BinaryMask::ones(4, 1).unwrap();
        let mut rng = ChaCha12Rng::seed_from_u64(4);
        let out = random_background_fill(&img, &all, &tex, &mut rng).unwrap();
        // Whatever the offset, the result alternates the two texture
        // columns.
        let a = out.pixel(0, 0);
        let b = out.pixel(1, 0);
        assert_ne!(a, b);
        assert_eq!(out.pixel(2, 0), a);
        assert_eq!(out.pixel(3, 0), b);
    }

    #[test]
    fn random_fill_is_seed_deterministic() {
        let mut rng1 = ChaCha12Rng::seed_from_u64(42);
        let mut rng2 = ChaCha12Rng::seed_from_u64(42);
        let img = solid(5, 3, 0.2);
        let tex = {
            let data: Vec<f64> = (0..4 * 2 * 3).map(|i| (i % 7) as f64 / 6.0).collect();
            ImagePlane::from_vec(4, 2, data).unwrap()
        };
        let holes = BinaryMask::from_vec(5, 3, vec![1, 0, 1, 0, 1, 0, 1, 0, 1, 0, 1, 0, 1, 0, 1])
            .unwrap();
        let a = random_background_fill(&img, &holes, &tex, &mut rng1).unwrap();
        let b = random_background_fill(&img, &holes, &tex, &mut rng2).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn composite_full_mask_returns_external() {
        let img = solid(2, 2, 1.0);
        let ext = solid(2, 2, 0.0);
        let all = BinaryMask::ones(2, 2).unwrap();
        assert_eq!(composite_external(&img, &all, &ext).unwrap(), ext);
    }

    #[test]
    fn composite_checkerboard_exact() {
        let white = solid(4, 4, 1.0);
        let black = solid(4, 4, 0.0);
        let mask: Vec<u8> = (0..16).map(|i| ((i / 4 + i % 4) % 2) as u8).collect();
        let holes = BinaryMask::from_vec(4, 4, mask).unwrap();
        let out = composite_external(&white, &holes, &black).unwrap();
        for y in 0..4 {
            for x in 0..4 {
                let expect = if (x + y) % 2 == 1 { [0.0; 3] } else { [1.0; 3] };
                assert_eq!(out.pixel(x, y), expect);
            }
        }
    }

    #[test]
    fn composite_is_idempotent() {
        let mut rng = ChaCha12Rng::seed_from_u64(77);
        let data: Vec<f64> = (0..6 * 2 * 3).map(|_| rng.gen_range(0.0..=1.0)).collect();
        let img = ImagePlane::from_vec(6, 2, data).unwrap();
        let ext_data: Vec<f64> = (0..6 * 2 * 3).map(|_| rng.gen_range(0.0..=1.0)).collect();
        let ext = ImagePlane::from_vec(6, 2, ext_data).unwrap();
        let mask: Vec<u8> = (0..12).map(|i| (i % 3 == 0) as u8).collect();
        let holes = BinaryMask::from_vec(6, 2, mask).unwrap();
        let once = composite_external(&img, &holes, &ext).unwrap();
        let twice = composite_external(&once, &holes, &ext).unwrap();
        assert_eq!(once, twice);
    }

    #[test]
    fn composite_dimension_mismatch_rejected() {
        let img = solid(2, 2, 0.5);
        let ext = solid(3, 2, 0.5);
        let holes = BinaryMask::ones(2, 2).unwrap();
        assert!(composite_external(&img, &holes, &ext).is_err());
    }
}
