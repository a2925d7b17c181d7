use std::path::PathBuf;

/// Crate-wide error type.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: malformed PFM header at byte offset {offset}: {detail}")]
    PfmMalformedHeader {
        path: PathBuf,
        offset: u64,
        detail: String,
    },

    #[error("{path}: unsupported channel count (color \"PF\" not supported) at byte offset {offset}")]
    PfmUnsupportedChannelCount { path: PathBuf, offset: u64 },

    #[error("{path}: dimension overflow at byte offset {offset}: {width} x {height}")]
    PfmDimensionOverflow {
        path: PathBuf,
        offset: u64,
        width: u64,
        height: u64,
    },

    #[error("{path}: truncated payload at byte offset {offset}: expected {expected} bytes, found {found}")]
    PfmTruncatedPayload {
        path: PathBuf,
        offset: u64,
        expected: u64,
        found: u64,
    },

    #[error("non-finite value at index {index} in {context}")]
    NonFinite { context: &'static str, index: usize },

    #[error("value {value} at index {index} not representable as a 32-bit float")]
    NotF32Representable { index: usize, value: f64 },

    #[error("{path}: unsupported PNG: {detail}")]
    PngUnsupported { path: PathBuf, detail: String },

    #[error("{path}: PNG decode error: {source}")]
    PngDecode {
        path: PathBuf,
        #[source]
        source: png::DecodingError,
    },

    #[error("{path}: PNG encode error: {source}")]
    PngEncode {
        path: PathBuf,
        #[source]
        source: png::EncodingError,
    },

    #[error("{path}: mask PNG has non-binary value {value} at pixel index {index}")]
    MaskNotBinary {
        path: PathBuf,
        index: usize,
        value: u16,
    },

    #[error("dimension mismatch in {context}: {expected_width}x{expected_height} vs {actual_width}x{actual_height}")]
    DimensionMismatch {
        context: &'static str,
        expected_width: usize,
        expected_height: usize,
        actual_width: usize,
        actual_height: usize,
    },

    #[error("invalid raster construction: {detail}")]
    InvalidRaster { detail: String },

    #[error("invalid configuration: {detail}")]
    InvalidConfig { detail: String },

    #[error("expected {expected} map in {context}, got {actual}")]
    KindMismatch {
        context: &'static str,
        expected: &'static str,
        actual: &'static str,
    },

    #[error("values out of range in {context}: {detail}")]
    OutOfRange {
        context: &'static str,
        detail: String,
    },

    #[error("valid mask selects no pixels in {context}")]
    EmptyValidMask { context: &'static str },

    #[error("no records in manifest")]
    EmptyManifest,

    #[error("{path}: manifest parse error on line {line}: {detail}")]
    ManifestParse {
        path: PathBuf,
        line: usize,
        detail: String,
    },

    #[error("missing output file: {path}")]
    MissingOutput { path: PathBuf },

    #[error("pipeline stage {stage} failed: {source}")]
    Stage {
        stage: &'static str,
        #[source]
        source: Box<Error>,
    },
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
