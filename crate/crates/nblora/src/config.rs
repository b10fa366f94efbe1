//! JSON experiment configurations. Unknown keys are rejected and every
//! numeric knob is validated before a run starts.

use serde::Deserialize;

use crate::completion::CompletionMode;
use crate::merge::MergeConfig;

#[derive(Clone, Copy, Debug, Deserialize, PartialEq, Eq)]
pub enum VariantName {
    I,
    II,
}

#[derive(Clone, Copy, Debug, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum ModeConfig {
    Penalty { gamma: f64 },
    Bound { delta: f64 },
}

fn default_steps() -> usize {
    8000
}

fn default_lr() -> f64 {
    0.1
}

fn default_weight_decay() -> f64 {
    0.01
}

fn default_warmup() -> f64 {
    0.1
}

/// Configuration of the `complete` subcommand.
#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CompleteConfig {
    pub m: usize,
    pub n: usize,
    pub true_rank: usize,
    pub noise_std: f64,
    pub drop_frac: f64,
    pub variant: VariantName,
    pub mode: ModeConfig,
    pub seed: u64,
    /// Defaults to twice the true rank.
    #[serde(default)]
    pub param_rank: Option<usize>,
    #[serde(default = "default_steps")]
    pub steps: usize,
    #[serde(default = "default_lr")]
    pub lr: f64,
    #[serde(default = "default_weight_decay")]
    pub weight_decay: f64,
    #[serde(default = "default_warmup")]
    pub warmup_frac: f64,
}

impl CompleteConfig {
    pub fn validate(&self) -> Result<(), String> {
        if self.m == 0 || self.n == 0 {
            return Err("m and n must be positive".into());
        }
        if self.true_rank == 0 || self.true_rank > self.m.min(self.n) {
            return Err("true_rank must be in 1..=min(m, n)".into());
        }
        if let Some(r) = self.param_rank {
            if r == 0 {
                return Err("param_rank must be positive".into());
            }
        }
        if !(0.0..1.0).contains(&self.drop_frac) {
            return Err("drop_frac must lie in [0, 1)".into());
        }
        if self.noise_std < 0.0 {
            return Err("noise_std must be non-negative".into());
        }
        match self.mode {
            ModeConfig::Penalty { gamma } if gamma < 0.0 => {
                return Err("gamma must be non-negative".into())
            }
            ModeConfig::Bound { delta } if delta <= 0.0 => {
                return Err("delta must be positive".into())
            }
            _ => {}
        }
        if self.steps == 0 {
            return Err("steps must be positive".into());
        }
        if self.lr <= 0.0 {
            return Err("lr must be positive".into());
        }
        if self.weight_decay < 0.0 {
            return Err("weight_decay must be non-negative".into());
        }
        if !(0.0 < self.warmup_frac && self.warmup_frac < 1.0) {
            return Err("warmup_frac must lie in (0, 1)".into());
        }
        Ok(())
    }

    pub fn mode(&self) -> CompletionMode {
        match self.mode {
            ModeConfig::Penalty { gamma } => CompletionMode::Penalty { gamma },
            ModeConfig::Bound { delta } => CompletionMode::Bound { delta },
        }
    }
}

/// Configuration of the `dpmerge` subcommand; optional fields fall back
/// to the desk-scale defaults.
#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DpMergeConfig {
    pub tasks: usize,
    pub sigma_list: Vec<f64>,
    pub seed: u64,
    #[serde(default = "d_noise_seeds")]
    pub noise_seeds: usize,
    #[serde(default = "d_bound_ratio")]
    pub bound_ratio: f64,
    #[serde(default = "d_adapter_rank")]
    pub adapter_rank: usize,
    #[serde(default = "d_input_dim")]
    pub input_dim: usize,
    #[serde(default = "d_feature_dim")]
    pub feature_dim: usize,
    #[serde(default = "d_num_classes")]
    pub num_classes: usize,
    #[serde(default = "d_samples_per_class")]
    pub samples_per_class: usize,
    #[serde(default = "d_test_per_class")]
    pub test_per_class: usize,
    #[serde(default = "d_separation")]
    pub separation: f64,
    #[serde(default = "d_steps")]
    pub steps: usize,
    #[serde(default = "d_lr")]
    pub lr: f64,
    #[serde(default = "default_weight_decay")]
    pub weight_decay: f64,
    #[serde(default = "default_warmup")]
    pub warmup_frac: f64,
}

fn d_noise_seeds() -> usize {
    5
}
fn d_bound_ratio() -> f64 {
    0.01
}
fn d_adapter_rank() -> usize {
    4
}
fn d_input_dim() -> usize {
    32
}
fn d_feature_dim() -> usize {
    64
}
fn d_num_classes() -> usize {
    10
}
fn d_samples_per_class() -> usize {
    200
}
fn d_test_per_class() -> usize {
    50
}
fn d_separation() -> f64 {
    4.0
}
fn d_steps() -> usize {
    300
}
fn d_lr() -> f64 {
    5e-3
}

impl DpMergeConfig {
    pub fn validate(&self) -> Result<(), String> {
        if self.tasks < 2 {
            return Err("need at least two tasks to merge".into());
        }
        if self.sigma_list.is_empty() {
            return Err("sigma_list must not be empty".into());
        }
        if self.sigma_list.iter().any(|&s| s < 0.0) {
            return Err("sigma values must be non-negative".into());
        }
        if self.noise_seeds == 0 {
            return Err("noise_seeds must be positive".into());
        }
        if self.bound_ratio <= 0.0 {
            return Err("bound_ratio must be positive".into());
        }
        if self.adapter_rank == 0 {
            return Err("adapter_rank must be positive".into());
        }
        if self.num_classes < self.tasks {
            return Err("num_classes must be at least the task count".into());
        }
        if self.input_dim < self.num_classes {
            return Err("input_dim must be at least num_classes".into());
        }
        if self.feature_dim == 0 || self.samples_per_class == 0 || self.test_per_class == 0 {
            return Err("dimensions and sample counts must be positive".into());
        }
        if self.steps == 0 || self.lr <= 0.0 {
            return Err("steps and lr must be positive".into());
        }
        if !(0.0 < self.warmup_frac && self.warmup_frac < 1.0) {
            return Err("warmup_frac must lie in (0, 1)".into());
        }
        Ok(())
    }

    pub fn to_merge_config(&self) -> MergeConfig {
        MergeConfig {
            tasks: self.tasks,
            sigma_list: self.sigma_list.clone(),
            noise_seeds: self.noise_seeds,
            bound_ratio: self.bound_ratio,
            adapter_rank: self.adapter_rank,
            input_dim: self.input_dim,
            feature_dim: self.feature_dim,
            num_classes: self.num_classes,
            samples_per_class: self.samples_per_class,
            test_per_class: self.test_per_class,
            separation: self.separation,
            steps: self.steps,
            lr: self.lr,
            weight_decay: self.weight_decay,
            warmup_frac: self.warmup_frac,
            seed: self.seed,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const GOOD_COMPLETE: &str = r#"{
        "m": 30, "n": 20, "true_rank": 3, "noise_std": 0.1, "drop_frac": 0.2,
        "variant": "I", "mode": {"penalty": {"gamma": 0.9}}, "seed": 7
    }"#;

    #[test]
    fn parses_complete_config() {
        let cfg: CompleteConfig = serde_json::from_str(GOOD_COMPLETE).unwrap();
        cfg.validate().unwrap();
        assert_eq!(cfg.steps, 8000);
        assert_eq!(cfg.variant, VariantName::I);
    }

    #[test]
    fn rejects_unknown_keys() {
        let bad = GOOD_COMPLETE.replace("\"seed\": 7", "\"seed\": 7, \"bogus\": 1");
        let res: Result<CompleteConfig, _> = serde_json::from_str(&bad);
        assert!(res.is_err());
    }

    #[test]
    fn rejects_invalid_numbers() {
        let neg_gamma = GOOD_COMPLETE.replace("0.9", "-0.5");
        let cfg: CompleteConfig = serde_json::from_str(&neg_gamma).unwrap();
        assert!(cfg.validate().is_err());

        let bad_delta = GOOD_COMPLETE.replace(
            "\"mode\": {\"penalty\": {\"gamma\": 0.9}}",
            "\"mode\": {\"bound\": {\"delta\": -1.0}}",
        );
        let cfg: CompleteConfig = serde_json::from_str(&bad_delta).unwrap();
        assert!(cfg.validate().is_err());

        let zero_rank = GOOD_COMPLETE.replace("\"true_rank\": 3", "\"true_rank\": 0");
        let cfg: CompleteConfig = serde_json::from_str(&zero_rank).unwrap();
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn parses_dpmerge_defaults() {
        let cfg: DpMergeConfig = serde_json::from_str(
            r#"{"tasks": 10, "sigma_list": [0.0, 0.1], "seed": 3}"#,
        )
        .unwrap();
        cfg.validate().unwrap();
        let mc = cfg.to_merge_config();
        assert_eq!(mc.bound_ratio, 0.01);
        assert_eq!(mc.adapter_rank, 4);
    }
}
