//! Pseudo-stereo training data from single images.
//!
//! Given a photograph and a monocular inverse-depth prediction for it, this
//! crate synthesizes the matching right view of a stereo pair together with
//! everything needed to supervise a stereo network on it: a pseudo disparity
//! map, a confidence map from flip consistency, and occlusion/hole masks.
//! It also evaluates the masked, confidence-weighted loss stack used for
//! training on such data, and the standard disparity error metrics.
//!
//! The stages compose left to right:
//!
//! ```text
//! left image ── depth ──► normalize ──► confidence (flip consistency)
//!                   │
//!                   └──► scale sampling ──► disparity ──► sharpen/dilate
//!                                                │
//!                         forward warp ◄─────────┘
//!                         │     │    │
//!                      warped  noc  holes ──► inpaint ──► right image
//! ```
//!
//! See the `pipeline` module for the batch orchestrator and manifest, and
//! the book under `book/` for worked chapters on each stage.

pub mod config;
pub mod depth;
pub mod disparity;
pub mod error;
pub mod inpaint;
pub mod io;
pub mod loss;
pub mod metrics;
pub mod pipeline;
pub mod raster;
pub mod warp;

pub use config::PipelineConfig;
pub use error::{Error, Result};
pub use raster::{BinaryMask, ImagePlane, MapKind, ScalarMap};
