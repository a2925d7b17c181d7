//! Pipeline configuration, loadable from TOML.
//!
//! ```toml
//! seed = 7
//!
//! [scale]
//! center = 0.1
//! radius = 0.05
//! p_small = 0.1
//! p_center = 0.8
//! p_large = 0.1
//!
//! [warp]
//! sharpen_threshold = 3.0
//! dilate_kernel = 3
//!
//! [inpaint]
//! backend = "neighbor_fill"   # neighbor_fill | random_background | external
//! # texture = "backgrounds.png"  # random_background only
//!
//! [loss]
//! beta = 0.85
//! mu = 0.1
//! ssim_window = 3
//! mean_over_kept = false
//! ```
//!
//! Every section and field is optional; omissions take the defaults above.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::disparity::ScaleConfig;
use crate::error::{Error, Result};
use crate::inpaint::BackendKind;
use crate::loss::LossConfig;

/// Disparity conditioning before the forward warp.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct WarpConfig {
    /// Gradient threshold (px/px) above which a pixel counts as flying.
    pub sharpen_threshold: f64,
    /// Odd edge length of the dilation window; 1 disables dilation.
    pub dilate_kernel: usize,
}

impl Default for WarpConfig {
    fn default() -> Self {
        Self {
            sharpen_threshold: 3.0,
            dilate_kernel: 3,
        }
    }
}

impl WarpConfig {
    pub fn validate(&self) -> Result<()> {
        if self.sharpen_threshold.is_nan() || self.sharpen_threshold < 0.0 {
            return Err(Error::InvalidConfig {
                detail: format!(
                    "sharpen_threshold = {} must be non-negative",
                    self.sharpen_threshold
                ),
            });
        }
        if self.dilate_kernel == 0 || self.dilate_kernel.is_multiple_of(2) {
            return Err(Error::InvalidConfig {
                detail: format!("dilate_kernel = {} must be odd", self.dilate_kernel),
            });
        }
        Ok(())
    }
}

/// Hole-filling backend selection.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct InpaintConfig {
    pub backend: BackendKind,
    /// Texture image for the random-background backend.
    pub texture: Option<PathBuf>,
}

impl Default for InpaintConfig {
    fn default() -> Self {
        Self {
            backend: BackendKind::NeighborFill,
            texture: None,
        }
    }
}

/// Everything a generation run needs.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PipelineConfig {
    /// Global seed; each sample derives an independent stream from
    /// `(seed, sample index)`.
    pub seed: u64,
    pub scale: ScaleConfig,
    pub warp: WarpConfig,
    pub inpaint: InpaintConfig,
    pub loss: LossConfig,
}

impl PipelineConfig {
    pub fn validate(&self) -> Result<()> {
        self.scale.validate()?;
        self.warp.validate()?;
        self.loss.validate()?;
        if self.inpaint.backend == BackendKind::RandomBackground && self.inpaint.texture.is_none()
        {
            return Err(Error::InvalidConfig {
                detail: "random_background backend requires inpaint.texture".into(),
            });
        }
        Ok(())
    }

    pub fn from_toml_str(text: &str) -> Result<Self> {
        let cfg: PipelineConfig = toml::from_str(text).map_err(|e| Error::InvalidConfig {
            detail: e.to_string(),
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml_str(&text)
    }
}
