//! Single-channel PFM ("Pf") reader and writer.
//!
//! The on-disk layout follows the Middlebury convention: an ASCII header
//! (`Pf`, then `width height`, then a scale factor) followed by raw 32-bit
//! floats stored bottom-up. A negative scale marks little-endian payloads,
//! positive marks big-endian. In memory rows are top-down; the writer always
//! emits little-endian with scale `-1.0`.
//!
//! Samples are 32-bit on disk. Maps whose values are exactly representable
//! as `f32` round-trip bit-exactly.

use std::path::Path;

use crate::error::{Error, Result};
use crate::raster::{MapKind, ScalarMap};

struct Cursor<'a> {
    bytes: &'a [u8],
    pos: usize,
    path: &'a Path,
}

impl<'a> Cursor<'a> {
    fn malformed(&self, offset: usize, detail: impl Into<String>) -> Error {
        Error::PfmMalformedHeader {
            path: self.path.to_path_buf(),
            offset: offset as u64,
            detail: detail.into(),
        }
    }

    /// Reads the next whitespace-delimited ASCII token, skipping leading
    /// whitespace. Returns the token and the offset it started at.
    fn token(&mut self) -> Result<(&'a str, usize)> {
        while self.pos < self.bytes.len() && self.bytes[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
        let start = self.pos;
        while self.pos < self.bytes.len() && !self.bytes[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
        if start == self.pos {
            return Err(self.malformed(start, "unexpected end of header"));
        }
        std::str::from_utf8(&self.bytes[start..self.pos])
            .map(|s| (s, start))
            .map_err(|_| self.malformed(start, "non-ASCII bytes in header"))
    }
}

/// Reads a single-channel PFM file into a [`ScalarMap`] tagged `kind`.
///
/// PFM carries no semantic metadata, so the caller names what the samples
/// mean.
pub fn read_pfm(path: impl AsRef<Path>, kind: MapKind) -> Result<ScalarMap> {
    let path = path.as_ref();
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    let mut cur = Cursor {
        bytes: &bytes,
        pos: 0,
        path,
    };

    let (magic, magic_off) = cur.token()?;
    match magic {
        "Pf" => {}
        "PF" => {
            return Err(Error::PfmUnsupportedChannelCount {
                path: path.to_path_buf(),
                offset: magic_off as u64,
            })
        }
        other => return Err(cur.malformed(magic_off, format!("bad magic {other:?}"))),
    }

    let (w_tok, w_off) = cur.token()?;
    let width: u64 = w_tok
        .parse()
        .map_err(|_| cur.malformed(w_off, format!("bad width {w_tok:?}")))?;
    let (h_tok, h_off) = cur.token()?;
    let height: u64 = h_tok
        .parse()
        .map_err(|_| cur.malformed(h_off, format!("bad height {h_tok:?}")))?;
    if width == 0 || height == 0 {
        return Err(cur.malformed(w_off, "dimensions must be positive"));
    }
    let sample_count = width
        .checked_mul(height)
        .filter(|n| n.checked_mul(4).is_some() && *n <= usize::MAX as u64);
    let Some(sample_count) = sample_count else {
        return Err(Error::PfmDimensionOverflow {
            path: path.to_path_buf(),
            offset: w_off as u64,
            width,
            height,
        });
    };

    let (s_tok, s_off) = cur.token()?;
    let scale: f32 = s_tok
        .parse()
        .map_err(|_| cur.malformed(s_off, format!("bad scale {s_tok:?}")))?;
    if scale == 0.0 {
        return Err(cur.malformed(s_off, "scale must be nonzero"));
    }
    let little_endian = scale < 0.0;

    // Exactly one whitespace byte separates the scale from the payload.
    if cur.pos >= bytes.len() || !bytes[cur.pos].is_ascii_whitespace() {
        return Err(cur.malformed(cur.pos, "missing separator before payload"));
    }
    let payload_off = cur.pos + 1;

    let expected = sample_count as usize * 4;
    let payload = &bytes[payload_off.min(bytes.len())..];
    if payload.len() < expected {
        return Err(Error::PfmTruncatedPayload {
            path: path.to_path_buf(),
            offset: (payload_off + payload.len()) as u64,
            expected: expected as u64,
            found: payload.len() as u64,
        });
    }

    let (width, height) = (width as usize, height as usize);
    let mut data = vec![0.0f64; width * height];
    for file_row in 0..height {
        let mem_row = height - 1 - file_row; // file rows run bottom-up
        for x in 0..width {
            let o = (file_row * width + x) * 4;
            let raw: [u8; 4] = payload[o..o + 4].try_into().unwrap();
            let v = if little_endian {
                f32::from_le_bytes(raw)
            } else {
                f32::from_be_bytes(raw)
            };
            data[mem_row * width + x] = v as f64;
        }
    }
    ScalarMap::from_vec(width, height, kind, data)
}

/// Encodes `map` as little-endian single-channel PFM bytes (scale `-1.0`).
pub fn encode_pfm(map: &ScalarMap) -> Result<Vec<u8>> {
    if let Some(index) = map.first_non_finite() {
        return Err(Error::NonFinite {
            context: "PFM payload",
            index,
        });
    }
    let (width, height) = map.dims();
    let mut out = Vec::with_capacity(width * height * 4 + 32);
    out.extend_from_slice(format!("Pf\n{width} {height}\n-1.0\n").as_bytes());
    for file_row in 0..height {
        let mem_row = height - 1 - file_row;
        for x in 0..width {
            let v = map.get(x, mem_row);
            let f = v as f32;
            if !f.is_finite() {
                return Err(Error::NotF32Representable {
                    index: mem_row * width + x,
                    value: v,
                });
            }
            out.extend_from_slice(&f.to_le_bytes());
        }
    }
    Ok(out)
}

/// Writes `map` to `path` as little-endian single-channel PFM.
///
/// The whole file is encoded and validated first, so a rejected map leaves
/// no bytes on disk.
pub fn write_pfm(map: &ScalarMap, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let bytes = encode_pfm(map)?;
    std::fs::write(path, bytes).map_err(|e| Error::io(path, e))
}
