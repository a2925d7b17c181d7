//! PNG I/O for color images, grayscale scalar maps, and binary masks.
//!
//! Reads accept 8- and 16-bit samples and scale them linearly to `[0, 1]`
//! (divide by 255 or 65535). Palette images and sub-byte depths are
//! rejected; an alpha channel, when present, is ignored. Writes quantize
//! with round-half-up. Masks are 8-bit grayscale with 0 ↔ 0 and 1 ↔ 255.

use std::fs::File;
use std::io::BufWriter;
use std::path::Path;

use png::{BitDepth, ColorType, Decoder, Encoder};

use crate::error::{Error, Result};
use crate::raster::{BinaryMask, ImagePlane, MapKind, ScalarMap};

struct Decoded {
    width: usize,
    height: usize,
    color: ColorType,
    sixteen_bit: bool,
    /// Samples scaled to [0, 1], channel-interleaved as stored.
    samples: Vec<f64>,
}

fn decode(path: &Path) -> Result<Decoded> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut reader = Decoder::new(file)
        .read_info()
        .map_err(|e| Error::PngDecode {
            path: path.to_path_buf(),
            source: e,
        })?;
    let (color, depth) = reader.output_color_type();
    if color == ColorType::Indexed {
        return Err(Error::PngUnsupported {
            path: path.to_path_buf(),
            detail: "palette images rejected".into(),
        });
    }
    let sixteen_bit = match depth {
        BitDepth::Eight => false,
        BitDepth::Sixteen => true,
        other => {
            return Err(Error::PngUnsupported {
                path: path.to_path_buf(),
                detail: format!("unsupported bit depth {other:?}"),
            })
        }
    };
    let mut buf = vec![0u8; reader.output_buffer_size()];
    let info = reader
        .next_frame(&mut buf)
        .map_err(|e| Error::PngDecode {
            path: path.to_path_buf(),
            source: e,
        })?;
    buf.truncate(info.buffer_size());

    let samples = if sixteen_bit {
        buf.chunks_exact(2)
            .map(|c| u16::from_be_bytes([c[0], c[1]]) as f64 / 65535.0)
            .collect()
    } else {
        buf.iter().map(|&v| v as f64 / 255.0).collect()
    };
    Ok(Decoded {
        width: info.width as usize,
        height: info.height as usize,
        color,
        sixteen_bit,
        samples,
    })
}

/// Reads an 8- or 16-bit PNG into an [`ImagePlane`] in `[0, 1]`.
///
/// Grayscale inputs are replicated across the three channels.
pub fn read_image(path: impl AsRef<Path>) -> Result<ImagePlane> {
    let path = path.as_ref();
    let d = decode(path)?;
    let n = d.width * d.height;
    let mut rgb = Vec::with_capacity(n * 3);
    match d.color {
        ColorType::Rgb | ColorType::Rgba => {
            let stride = if d.color == ColorType::Rgb { 3 } else { 4 };
            for px in d.samples.chunks_exact(stride) {
                rgb.extend_from_slice(&px[..3]);
            }
        }
        ColorType::Grayscale | ColorType::GrayscaleAlpha => {
            let stride = if d.color == ColorType::Grayscale { 1 } else { 2 };
            for px in d.samples.chunks_exact(stride) {
                rgb.extend_from_slice(&[px[0], px[0], px[0]]);
            }
        }
        ColorType::Indexed => unreachable!("rejected in decode"),
    }
    ImagePlane::from_vec(d.width, d.height, rgb)
}

/// Reads an 8- or 16-bit grayscale PNG as a scalar field in `[0, 1]`.
pub fn read_gray_scalar(path: impl AsRef<Path>, kind: MapKind) -> Result<ScalarMap> {
    let path = path.as_ref();
    let d = decode(path)?;
    let data = match d.color {
        ColorType::Grayscale => d.samples,
        ColorType::GrayscaleAlpha => d.samples.chunks_exact(2).map(|px| px[0]).collect(),
        other => {
            return Err(Error::PngUnsupported {
                path: path.to_path_buf(),
                detail: format!("scalar maps must be grayscale, got {other:?}"),
            })
        }
    };
    ScalarMap::from_vec(d.width, d.height, kind, data)
}

/// Reads an 8-bit grayscale PNG as a strict `{0, 255}` binary mask.
pub fn read_mask(path: impl AsRef<Path>) -> Result<BinaryMask> {
    let path = path.as_ref();
    let d = decode(path)?;
    if d.color != ColorType::Grayscale || d.sixteen_bit {
        return Err(Error::PngUnsupported {
            path: path.to_path_buf(),
            detail: "masks must be 8-bit grayscale".into(),
        });
    }
    let mut data = Vec::with_capacity(d.samples.len());
    for (index, &s) in d.samples.iter().enumerate() {
        let raw = (s * 255.0).round() as u16;
        match raw {
            0 => data.push(0u8),
            255 => data.push(1u8),
            value => {
                return Err(Error::MaskNotBinary {
                    path: path.to_path_buf(),
                    index,
                    value,
                })
            }
        }
    }
    BinaryMask::from_vec(d.width, d.height, data)
}

fn quantize8(v: f64) -> u8 {
    // round-half-up on [0, 1] input
    ((v * 255.0 + 0.5).floor() as i64).clamp(0, 255) as u8
}

fn quantize16(v: f64) -> u16 {
    ((v * 65535.0 + 0.5).floor() as i64).clamp(0, 65535) as u16
}

fn write_png(
    path: &Path,
    width: usize,
    height: usize,
    color: ColorType,
    depth: BitDepth,
    bytes: &[u8],
) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut enc = Encoder::new(BufWriter::new(file), width as u32, height as u32);
    enc.set_color(color);
    enc.set_depth(depth);
    let mut writer = enc.write_header().map_err(|e| Error::PngEncode {
        path: path.to_path_buf(),
        source: e,
    })?;
    writer
        .write_image_data(bytes)
        .map_err(|e| Error::PngEncode {
            path: path.to_path_buf(),
            source: e,
        })
}

/// Writes an 8-bit RGB PNG, quantizing with round-half-up.
pub fn write_image(image: &ImagePlane, path: impl AsRef<Path>) -> Result<()> {
    let bytes: Vec<u8> = image.data().iter().map(|&v| quantize8(v)).collect();
    write_png(
        path.as_ref(),
        image.width(),
        image.height(),
        ColorType::Rgb,
        BitDepth::Eight,
        &bytes,
    )
}

/// Writes a 16-bit RGB PNG, quantizing with round-half-up.
pub fn write_image16(image: &ImagePlane, path: impl AsRef<Path>) -> Result<()> {
    let mut bytes = Vec::with_capacity(image.data().len() * 2);
    for &v in image.data() {
        bytes.extend_from_slice(&quantize16(v).to_be_bytes());
    }
    write_png(
        path.as_ref(),
        image.width(),
        image.height(),
        ColorType::Rgb,
        BitDepth::Sixteen,
        &bytes,
    )
}

/// Writes a binary mask as 8-bit grayscale, 1 ↔ 255.
pub fn write_mask(mask: &BinaryMask, path: impl AsRef<Path>) -> Result<()> {
    let bytes: Vec<u8> = mask.data().iter().map(|&v| v * 255).collect();
    write_png(
        path.as_ref(),
        mask.width(),
        mask.height(),
        ColorType::Grayscale,
        BitDepth::Eight,
        &bytes,
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tmp() -> tempfile::TempDir {
        tempfile::tempdir().unwrap()
    }

    fn write_raw_png(path: &Path, w: u32, h: u32, color: ColorType, depth: BitDepth, data: &[u8]) {
        let file = File::create(path).unwrap();
        let mut enc = Encoder::new(BufWriter::new(file), w, h);
        enc.set_color(color);
        enc.set_depth(depth);
        if color == ColorType::Indexed {
            enc.set_palette(vec![0, 0, 0, 255, 255, 255]);
        }
        let mut writer = enc.write_header().unwrap();
        writer.write_image_data(data).unwrap();
    }

    #[test]
    fn eight_bit_scaling() {
        let dir = tmp();
        let p = dir.path().join("g.png");
        write_raw_png(
            &p,
            2,
            1,
            ColorType::Rgb,
            BitDepth::Eight,
            &[255, 255, 255, 128, 128, 128],
        );
        let img = read_image(&p).unwrap();
        assert_eq!(img.pixel(0, 0), [1.0, 1.0, 1.0]);
        assert_eq!(img.pixel(1, 0), [128.0 / 255.0; 3]);
    }

    #[test]
    fn sixteen_bit_scaling() {
        let dir = tmp();
        let p = dir.path().join("g16.png");
        let px: Vec<u8> = [65535u16, 0, 32768, 65535, 0, 32768]
            .iter()
            .flat_map(|v| v.to_be_bytes())
            .collect();
        write_raw_png(&p, 2, 1, ColorType::Rgb, BitDepth::Sixteen, &px);
        let img = read_image(&p).unwrap();
        assert_eq!(img.pixel(0, 0), [1.0, 0.0, 32768.0 / 65535.0]);
    }

    #[test]
    fn grayscale_replicated_to_rgb() {
        let dir = tmp();
        let p = dir.path().join("l.png");
        write_raw_png(&p, 1, 1, ColorType::Grayscale, BitDepth::Eight, &[51]);
        let img = read_image(&p).unwrap();
        assert_eq!(img.pixel(0, 0), [51.0 / 255.0; 3]);
    }

    #[test]
    fn alpha_ignored() {
        let dir = tmp();
        let p = dir.path().join("a.png");
        write_raw_png(&p, 1, 1, ColorType::Rgba, BitDepth::Eight, &[10, 20, 30, 99]);
        let img = read_image(&p).unwrap();
        assert_eq!(img.pixel(0, 0), [10.0 / 255.0, 20.0 / 255.0, 30.0 / 255.0]);
    }

    #[test]
    fn palette_rejected() {
        let dir = tmp();
        let p = dir.path().join("p.png");
        write_raw_png(&p, 2, 1, ColorType::Indexed, BitDepth::Eight, &[0, 1]);
        assert!(matches!(
            read_image(&p),
            Err(Error::PngUnsupported { .. })
        ));
    }

    #[test]
    fn sub_byte_depth_rejected() {
        let dir = tmp();
        let p = dir.path().join("bw.png");
        write_raw_png(&p, 8, 1, ColorType::Grayscale, BitDepth::One, &[0b1010_1010]);
        assert!(matches!(
            read_image(&p),
            Err(Error::PngUnsupported { .. })
        ));
    }

    #[test]
    fn write_read_write_byte_identical() {
        let dir = tmp();
        let p1 = dir.path().join("a.png");
        let p2 = dir.path().join("b.png");
        let data: Vec<f64> = (0..4 * 3 * 3).map(|i| (i % 256) as f64 / 255.0).collect();
        let img = ImagePlane::from_vec(4, 3, data).unwrap();
        write_image(&img, &p1).unwrap();
        let back = read_image(&p1).unwrap();
        assert_eq!(back, img, "8-bit values survive the round trip exactly");
        write_image(&back, &p2).unwrap();
        assert_eq!(
            std::fs::read(&p1).unwrap(),
            std::fs::read(&p2).unwrap(),
            "re-encoding a decoded image is byte-identical"
        );
    }

    #[test]
    fn quantization_rounds_half_up() {
        // 0.5 / 255 scaled back is exactly the tie; half-up picks 1.
        assert_eq!(quantize8(0.5 / 255.0), 1);
        assert_eq!(quantize8(0.0), 0);
        assert_eq!(quantize8(1.0), 255);
        assert_eq!(quantize16(1.0), 65535);
    }

    #[test]
    fn sixteen_bit_write_round_trips() {
        let dir = tmp();
        let p = dir.path().join("w16.png");
        let img = ImagePlane::from_vec(
            2,
            1,
            vec![0.0, 1.0, 32768.0 / 65535.0, 1.0 / 65535.0, 0.5, 0.25],
        )
        .unwrap();
        write_image16(&img, &p).unwrap();
        let back = read_image(&p).unwrap();
        assert_eq!(back.pixel(0, 0), [0.0, 1.0, 32768.0 / 65535.0]);
        assert_eq!(back.pixel(1, 0)[0], 1.0 / 65535.0);
        // 0.5 quantizes half-up to 32768/65535.
        assert_eq!(back.pixel(1, 0)[1], 32768.0 / 65535.0);
    }

    #[test]
    fn mask_round_trip_and_strictness() {
        let dir = tmp();
        let p = dir.path().join("m.png");
        let m = BinaryMask::from_vec(3, 1, vec![1, 0, 1]).unwrap();
        write_mask(&m, &p).unwrap();
        assert_eq!(read_mask(&p).unwrap(), m);

        let bad = dir.path().join("bad.png");
        write_raw_png(&bad, 2, 1, ColorType::Grayscale, BitDepth::Eight, &[0, 7]);
        match read_mask(&bad) {
            Err(Error::MaskNotBinary { index, value, .. }) => {
                assert_eq!((index, value), (1, 7));
            }
            other => panic!("expected non-binary mask error, got {other:?}"),
        }
    }

    #[test]
    fn gray_scalar_reads_16_bit() {
        let dir = tmp();
        let p = dir.path().join("d.png");
        let px: Vec<u8> = [0u16, 65535].iter().flat_map(|v| v.to_be_bytes()).collect();
        write_raw_png(&p, 2, 1, ColorType::Grayscale, BitDepth::Sixteen, &px);
        let m = read_gray_scalar(&p, MapKind::InverseDepth).unwrap();
        assert_eq!(m.data(), &[0.0, 1.0]);
    }

    #[test]
    fn gray_scalar_rejects_rgb() {
        let dir = tmp();
        let p = dir.path().join("rgb.png");
        write_raw_png(&p, 1, 1, ColorType::Rgb, BitDepth::Eight, &[1, 2, 3]);
        assert!(read_gray_scalar(&p, MapKind::InverseDepth).is_err());
    }
}
