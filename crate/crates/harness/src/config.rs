//! Method/preset plumbing shared by the CLI, the grid runner, and the real-pair
//! benchmark.

use serde::{Deserialize, Serialize};

use bidd_core::decision::{
    baseline_mse_min, baseline_resid_indep, baseline_var_sort, bidd_decide, BiddConfig,
    DirectionVerdict,
};
use bidd_core::dgp::PairDataset;
use bidd_core::numerics::Rng;

use crate::error::Result;

/// Deciders the harness can run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    Bidd,
    /// BiDD trained on the unconditional loss (condition input masked to zero).
    BiddUnconditional,
    VarSort,
    MseLite,
    ResidLite,
}

impl Method {
    pub fn label(&self) -> &'static str {
        match self {
            Method::Bidd => "bidd",
            Method::BiddUnconditional => "bidd-unconditional",
            Method::VarSort => "var-sort",
            Method::MseLite => "mse-lite",
            Method::ResidLite => "resid-lite",
        }
    }

    /// Variance sorting needs the raw (unstandardized) columns.
    pub fn wants_raw_data(&self) -> bool {
        matches!(self, Method::VarSort)
    }
}

/// Model-size/epoch preset.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Preset {
    /// Published configuration (width 512, 4000 epochs, oversample 10).
    Paper,
    /// CPU-budget configuration (width 128, 1500 epochs, oversample 2).
    #[default]
    Desk,
}

/// Optional knob overrides applied on top of a preset.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct PresetOverrides {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub epochs: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub width: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub timesteps: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub oversample: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub res_blocks: Option<usize>,
}

impl Preset {
    pub fn base_config(&self) -> BiddConfig {
        match self {
            Preset::Paper => BiddConfig::paper(),
            Preset::Desk => BiddConfig::desk(),
        }
    }
}

/// Assemble the BiDD configuration for a preset plus overrides; estimator,
/// rule, and policy are set by the caller afterwards.
pub fn build_bidd_config(preset: Preset, overrides: &PresetOverrides) -> BiddConfig {
    let mut cfg = preset.base_config();
    if let Some(e) = overrides.epochs {
        cfg.train.epochs = e;
    }
    if let Some(w) = overrides.width {
        cfg.denoiser.width = w;
    }
    if let Some(t) = overrides.timesteps {
        cfg.train.timesteps = t;
        cfg.denoiser.t_max = t;
    }
    if let Some(k) = overrides.oversample {
        cfg.oversample = k;
    }
    if let Some(b) = overrides.res_blocks {
        cfg.denoiser.n_res_blocks = b;
    }
    cfg
}

/// Dispatch one decision. `bidd_cfg` carries estimator/rule/policy for the
/// learned methods; the baselines ignore it.
pub fn decide_with_method(
    method: Method,
    data: &PairDataset,
    bidd_cfg: &BiddConfig,
    rng: &Rng,
) -> Result<DirectionVerdict> {
    let verdict = match method {
        Method::Bidd => bidd_decide(data, bidd_cfg, rng)?.verdict,
        Method::BiddUnconditional => {
            let mut cfg = bidd_cfg.clone();
            cfg.denoiser.conditional = false;
            bidd_decide(data, &cfg, rng)?.verdict
        }
        Method::VarSort => baseline_var_sort(data)?,
        Method::MseLite => baseline_mse_min(data)?,
        Method::ResidLite => baseline_resid_indep(data)?,
    };
    Ok(verdict)
}
