//! File I/O: PFM scalar maps and PNG images/masks.

pub mod pfm;
pub mod png_io;

use std::path::Path;

use crate::error::{Error, Result};
use crate::raster::{MapKind, ScalarMap};

pub use pfm::{encode_pfm, read_pfm, write_pfm};
pub use png_io::{
    read_gray_scalar, read_image, read_mask, write_image, write_image16, write_mask,
};

/// Reads a scalar map from either a PFM file or a grayscale PNG, picking the
/// decoder by file extension.
pub fn read_scalar(path: impl AsRef<Path>, kind: MapKind) -> Result<ScalarMap> {
    let path = path.as_ref();
    match path
        .extension()
        .and_then(|e| e.to_str())
        .map(|e| e.to_ascii_lowercase())
        .as_deref()
    {
        Some("pfm") => read_pfm(path, kind),
        Some("png") => read_gray_scalar(path, kind),
        _ => Err(Error::PngUnsupported {
            path: path.to_path_buf(),
            detail: "scalar maps must be .pfm or .png".into(),
        }),
    }
}
