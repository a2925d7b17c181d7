//! Doctest shim for the book.
//!
//! mdbook cannot run code listings against crate dependencies, so each
//! chapter is included here as a rustdoc comment: `cargo test --doc -p
//! stereoforge-guide` compiles and runs every Rust listing in the book,
//! keeping the prose and the API in lockstep.

#[doc = include_str!("../../../book/src/introduction.md")]
pub mod introduction {}

#[doc = include_str!("../../../book/src/rasters-and-io.md")]
pub mod rasters_and_io {}

#[doc = include_str!("../../../book/src/depth-and-confidence.md")]
pub mod depth_and_confidence {}

#[doc = include_str!("../../../book/src/disparity-sampling.md")]
pub mod disparity_sampling {}

#[doc = include_str!("../../../book/src/warping.md")]
pub mod warping {}

#[doc = include_str!("../../../book/src/inpainting.md")]
pub mod inpainting {}

#[doc = include_str!("../../../book/src/losses.md")]
pub mod losses {}

#[doc = include_str!("../../../book/src/metrics.md")]
pub mod metrics {}

#[doc = include_str!("../../../book/src/pipeline-and-cli.md")]
pub mod pipeline_and_cli {}
