use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::prune::{PruneParams, DEFAULT_ALPHA_MIN, DEFAULT_N_MIN, DEFAULT_TAU};

/// Every knob of a training run. Iteration gates are given at full scale
/// and shrunk by `schedule_scale` (see [`super::Schedule`]).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    pub iterations: usize,
    pub schedule_scale: f64,
    pub accum_start: usize,
    pub reg_start: usize,
    pub prune_start: usize,
    pub prune_interval: usize,
    pub densify_start: usize,
    pub densify_until: usize,
    pub densify_interval: usize,

    pub beta: f64,
    pub lambda_c: f64,
    pub ssim_weight: f64,
    pub tau: f64,
    pub n_min: u64,
    pub alpha_min: f64,
    pub prune_enabled: bool,

    /// Mean screen-space position gradient norm that triggers densification.
    pub densify_grad_threshold: f64,
    /// Clone below this world scale, split above.
    pub densify_scale_threshold: f64,
    pub split_factor: f64,
    pub max_gaussians: usize,
    pub cull_opacity: f64,

    pub lr_position: f64,
    pub lr_position_final: f64,
    pub lr_color: f64,
    pub lr_opacity: f64,
    pub lr_scale: f64,
    pub lr_rotation: f64,
    pub adam_beta1: f64,
    pub adam_beta2: f64,
    pub adam_eps: f64,

    pub init_opacity: f64,
    pub truncation: f64,
    pub seed: u64,
    /// `oracle`, or the path of a score file.
    pub scorer: String,
    /// Write a checkpoint every this many iterations; 0 disables.
    pub checkpoint_interval: usize,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            iterations: 20_000,
            schedule_scale: 0.1,
            accum_start: 500,
            reg_start: 2_000,
            prune_start: 5_000,
            prune_interval: 1_000,
            densify_start: 500,
            densify_until: 10_000,
            densify_interval: 100,

            beta: 0.1,
            lambda_c: crate::loss::DEFAULT_LAMBDA_C,
            ssim_weight: crate::loss::DEFAULT_SSIM_WEIGHT,
            tau: DEFAULT_TAU,
            n_min: DEFAULT_N_MIN,
            alpha_min: DEFAULT_ALPHA_MIN,
            prune_enabled: true,

            densify_grad_threshold: 5e-4,
            densify_scale_threshold: 0.05,
            split_factor: 1.6,
            max_gaussians: 3_000,
            cull_opacity: 0.005,

            lr_position: 0.004,
            lr_position_final: 0.00004,
            lr_color: 0.01,
            lr_opacity: 0.05,
            lr_scale: 0.01,
            lr_rotation: 0.005,
            adam_beta1: 0.9,
            adam_beta2: 0.999,
            adam_eps: 1e-15,

            init_opacity: 0.1,
            truncation: 3.0,
            seed: 0,
            scorer: "oracle".into(),
            checkpoint_interval: 0,
        }
    }
}

impl TrainConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.message().to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))
    }

    /// Layers `overrides` (a flat table of field values) on top of `self`.
    pub fn merged(&self, overrides: &toml::Table) -> Result<Self> {
        let mut table = toml::Table::try_from(self).map_err(|e| Error::Config(e.to_string()))?;
        for (k, v) in overrides {
            if !table.contains_key(k) {
                return Err(Error::Config(format!("unknown config key `{k}`")));
            }
            table.insert(k.clone(), v.clone());
        }
        table.try_into().map_err(|e: toml::de::Error| Error::Config(e.message().to_string()))
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn prune_params(&self) -> PruneParams {
        PruneParams {
            tau: self.tau,
            n_min: self.n_min,
            alpha_min: self.alpha_min,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let fail = |m: String| Err(Error::Config(m));
        let positive = [
            ("schedule_scale", self.schedule_scale),
            ("beta", self.beta),
            ("split_factor", self.split_factor),
            ("adam_eps", self.adam_eps),
            ("truncation", self.truncation),
        ];
        for (name, v) in positive {
            if !(v > 0.0) {
                return fail(format!("{name} must be positive, got {v}"));
            }
        }
        let non_negative = [
            ("lambda_c", self.lambda_c),
            ("lr_position", self.lr_position),
            ("lr_position_final", self.lr_position_final),
            ("lr_color", self.lr_color),
            ("lr_opacity", self.lr_opacity),
            ("lr_scale", self.lr_scale),
            ("lr_rotation", self.lr_rotation),
            ("densify_grad_threshold", self.densify_grad_threshold),
            ("densify_scale_threshold", self.densify_scale_threshold),
            ("cull_opacity", self.cull_opacity),
        ];
        for (name, v) in non_negative {
            if !(v >= 0.0 && v.is_finite()) {
                return fail(format!("{name} must be finite and non-negative, got {v}"));
            }
        }
        if !(0.0..=1.0).contains(&self.ssim_weight) {
            return fail(format!("ssim_weight must lie in [0, 1], got {}", self.ssim_weight));
        }
        if !(self.init_opacity > 0.0 && self.init_opacity < 1.0) {
            return fail(format!("init_opacity must lie in (0, 1), got {}", self.init_opacity));
        }
        if !(0.0..1.0).contains(&self.adam_beta1) || !(0.0..1.0).contains(&self.adam_beta2) {
            return fail("adam moment coefficients must lie in [0, 1)".into());
        }
        if self.tau.is_nan() || self.alpha_min.is_nan() {
            return fail("tau and alpha_min must be numbers".into());
        }
        super::Schedule::from_config(self).map(|_| ())
    }
}
