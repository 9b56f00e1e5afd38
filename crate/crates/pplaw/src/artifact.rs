//! The `fit.json` artifact read by the later pipeline stages.

use std::path::Path;

use anyhow::{Context, Result};
use pplaw_core::{BandConfig, FitConfig, FitResult, LawParams, SearchBox, Validation};
use serde::{Deserialize, Serialize};

use crate::io::read_json;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitArtifact {
    pub result: FitResult,
    pub validation: Option<Validation>,
    pub config: FitConfig,
    pub band: BandConfig,
    pub val_fraction: f64,
    pub seed: u64,
    /// Bounding box of the observed `(mu, sigma)`.
    pub data_box: SearchBox,
    /// Largest observed token count.
    pub d_max: f64,
}

impl FitArtifact {
    pub fn params(&self) -> &LawParams {
        &self.result.params
    }
}

/// Reads law parameters from either a bare parameter file or a fit artifact.
pub fn read_law(path: &Path) -> Result<LawParams> {
    let value: serde_json::Value = read_json(path)?;
    let params = if value.get("result").is_some() {
        serde_json::from_value::<FitArtifact>(value).map(|a| a.result.params)
    } else {
        serde_json::from_value::<LawParams>(value)
    };
    params.with_context(|| format!("{}: not a law or fit artifact", path.display()))
}
