use std::path::{Path, PathBuf};

use fsltr_tensor::optim::AdamConfig;
use serde::{Deserialize, Serialize};

use super::method::MethodName;
use crate::data::SyntheticSpec;
use crate::error::{CoreError, Result};
use crate::ltr::{TauSchedule, TrainConfig};
use crate::selectors::TabNetConfig;

/// Where the data comes from: three LETOR files or a synthetic spec.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DataConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub train: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub valid: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub test: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub synthetic: Option<SyntheticSpec>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TransformConfig {
    pub log1p: bool,
    pub standardize: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TrainingConfig {
    pub epochs: usize,
    /// `null` disables early stopping.
    pub patience: Option<usize>,
    pub restore_best: bool,
    pub adam: AdamConfig,
}

impl Default for TrainingConfig {
    fn default() -> Self {
        Self {
            epochs: 50,
            patience: Some(10),
            restore_best: true,
            adam: AdamConfig::default(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct IfgConfig {
    /// Defaults to `ceil(d / 5)`.
    pub groups: Option<usize>,
    /// Grid over the number of selected groups.
    pub group_budgets: Vec<usize>,
    pub lambda_rec: f64,
}

impl Default for IfgConfig {
    fn default() -> Self {
        Self {
            groups: None,
            group_budgets: vec![1, 2, 4],
            lambda_rec: 1.0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct InvaseConfig {
    pub lambdas: Vec<f64>,
}

impl Default for InvaseConfig {
    fn default() -> Self {
        Self {
            lambdas: vec![0.1, 1.0, 10.0, 100.0, 1000.0],
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct LassoNetConfig {
    pub hierarchy: f64,
    /// Path values are `lambda_start * lambda_factor^i`. The path stops
    /// early once no feature survives.
    pub lambda_start: f64,
    pub lambda_factor: f64,
    pub path_length: usize,
    pub epochs_per_lambda: usize,
}

impl Default for LassoNetConfig {
    fn default() -> Self {
        Self {
            hierarchy: 10.0,
            lambda_start: 1.0,
            lambda_factor: 1.25,
            path_length: 60,
            epochs_per_lambda: 5,
        }
    }
}

impl LassoNetConfig {
    pub fn path(&self) -> Vec<f64> {
        (0..self.path_length)
            .map(|i| self.lambda_start * self.lambda_factor.powi(i as i32))
            .collect()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TabNetGrid {
    pub steps: usize,
    pub gamma: f64,
    pub decision_width: usize,
    pub attention_width: usize,
    /// Grid over the sparsity weight.
    pub lambda_sparse: Vec<f64>,
}

impl Default for TabNetGrid {
    fn default() -> Self {
        let d = TabNetConfig::default();
        Self {
            steps: d.steps,
            gamma: d.gamma,
            decision_width: d.decision_width,
            attention_width: d.attention_width,
            lambda_sparse: vec![d.lambda_sparse],
        }
    }
}

impl TabNetGrid {
    pub fn at(&self, lambda_sparse: f64) -> TabNetConfig {
        TabNetConfig {
            steps: self.steps,
            gamma: self.gamma,
            lambda_sparse,
            decision_width: self.decision_width,
            attention_width: self.attention_width,
        }
    }
}

fn default_budget() -> f64 {
    0.1
}

fn default_widths() -> Vec<usize> {
    vec![512, 256, 128]
}

fn default_seeds() -> Vec<u64> {
    vec![1, 2, 3, 4, 5]
}

fn default_output_dir() -> PathBuf {
    PathBuf::from("runs/latest")
}

fn default_budgets() -> Vec<f64> {
    vec![0.05, 0.1, 0.2, 0.3, 0.5, 1.0]
}

/// One experiment: data, method, hyperparameters and seeds.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub method: MethodName,
    #[serde(default)]
    pub data: DataConfig,
    #[serde(default)]
    pub transforms: TransformConfig,
    /// Fraction of features a fixed-budget method keeps.
    #[serde(default = "default_budget")]
    pub budget: f64,
    /// Overrides the budget-derived feature count.
    #[serde(default)]
    pub k: Option<usize>,
    #[serde(default)]
    pub tau: TauSchedule,
    #[serde(default = "default_widths")]
    pub widths: Vec<usize>,
    #[serde(default)]
    pub training: TrainingConfig,
    #[serde(default = "default_seeds")]
    pub seeds: Vec<u64>,
    #[serde(default)]
    pub cost_table: Option<PathBuf>,
    #[serde(default = "default_output_dir")]
    pub output_dir: PathBuf,
    /// Score test documents with sampled instead of deterministic masks.
    #[serde(default)]
    pub sample_eval_masks: bool,
    #[serde(default)]
    pub ifg: IfgConfig,
    #[serde(default)]
    pub invase: InvaseConfig,
    #[serde(default)]
    pub lassonet: LassoNetConfig,
    #[serde(default)]
    pub tabnet: TabNetGrid,
    /// Budget fractions for budgeted evaluation, strictly increasing.
    #[serde(default = "default_budgets")]
    pub budgets: Vec<f64>,
}

impl ExperimentConfig {
    /// All defaults for `method`, with no data source.
    pub fn new(method: MethodName) -> ExperimentConfig {
        serde_json::from_value(serde_json::json!({ "method": method })).expect("defaults deserialize")
    }

    pub fn from_json(text: &str) -> Result<ExperimentConfig> {
        serde_json::from_str(text).map_err(|e| CoreError::Config(vec![e.to_string()]))
    }

    pub fn train_config(&self) -> TrainConfig {
        TrainConfig {
            epochs: self.training.epochs,
            patience: self.training.patience,
            restore_best: self.training.restore_best,
            tau: self.tau,
        }
    }

    /// Fixed-budget feature count for `d` features: `max(1, floor(budget·d))`
    /// unless `k` is given.
    pub fn fixed_k(&self, d: usize) -> usize {
        self.k
            .unwrap_or_else(|| ((self.budget * d as f64).floor() as usize).max(1))
    }

    /// Makes data and cost-table paths relative to `base` absolute.
    pub fn resolve_paths(&mut self, base: &Path) {
        let fix = |p: &mut Option<PathBuf>| {
            if let Some(path) = p {
                if path.is_relative() {
                    *path = base.join(&*path);
                }
            }
        };
        fix(&mut self.data.train);
        fix(&mut self.data.valid);
        fix(&mut self.data.test);
        fix(&mut self.cost_table);
    }

    /// Collects every constraint violation.
    pub fn validate(&self) -> Result<()> {
        let mut errors = Vec::new();
        let mut check = |ok: bool, msg: String| {
            if !ok {
                errors.push(msg);
            }
        };
        check(
            self.budget > 0.0 && self.budget <= 1.0,
            format!("budget: must be in (0, 1], got {}", self.budget),
        );
        check(self.k != Some(0), "k: must be >= 1".into());
        check(!self.seeds.is_empty(), "seeds: must not be empty".into());
        let mut unique = self.seeds.clone();
        unique.sort_unstable();
        unique.dedup();
        check(unique.len() == self.seeds.len(), "seeds: must be distinct".into());
        check(
            !self.widths.is_empty() && self.widths.iter().all(|&w| w > 0),
            "widths: need at least one positive width".into(),
        );
        check(self.training.epochs >= 1, "training.epochs: must be >= 1".into());
        check(self.training.patience != Some(0), "training.patience: must be >= 1 or null".into());
        let adam = &self.training.adam;
        check(
            adam.lr > 0.0 && adam.lr.is_finite(),
            format!("training.adam.lr: must be > 0, got {}", adam.lr),
        );
        check(
            (0.0..1.0).contains(&adam.beta1) && (0.0..1.0).contains(&adam.beta2),
            "training.adam: betas must be in [0, 1)".into(),
        );
        check(adam.eps > 0.0, "training.adam.eps: must be > 0".into());
        if let Err(e) = self.tau.validate() {
            check(false, format!("tau: {e}"));
        }

        let d = &self.data;
        let files = [&d.train, &d.valid, &d.test].iter().filter(|p| p.is_some()).count();
        match (files, &d.synthetic) {
            (3, None) => {}
            (0, Some(spec)) => {
                if let Err(e) = spec.validate() {
                    check(false, format!("data.synthetic: {e}"));
                }
            }
            (0, None) => check(false, "data: provide train, valid and test paths or a synthetic spec".into()),
            (_, Some(_)) => check(false, "data: paths and synthetic are mutually exclusive".into()),
            _ => check(false, "data: train, valid and test paths are all required".into()),
        }

        let ifg = &self.ifg;
        check(ifg.groups != Some(0), "ifg.groups: must be >= 1".into());
        check(
            !ifg.group_budgets.is_empty() && ifg.group_budgets.iter().all(|&k| k >= 1),
            "ifg.group_budgets: need at least one value >= 1".into(),
        );
        if let Some(g) = ifg.groups {
            check(
                ifg.group_budgets.iter().all(|&k| k <= g),
                format!("ifg.group_budgets: values must not exceed ifg.groups = {g}"),
            );
        }
        check(
            ifg.lambda_rec >= 0.0 && ifg.lambda_rec.is_finite(),
            "ifg.lambda_rec: must be finite and >= 0".into(),
        );
        check(
            !self.invase.lambdas.is_empty() && self.invase.lambdas.iter().all(|l| l.is_finite() && *l >= 0.0),
            "invase.lambdas: need at least one finite value >= 0".into(),
        );
        let ln = &self.lassonet;
        check(
            ln.hierarchy > 0.0 && ln.hierarchy.is_finite(),
            format!("lassonet.hierarchy: must be > 0, got {}", ln.hierarchy),
        );
        check(
            ln.lambda_start > 0.0 && ln.lambda_start.is_finite(),
            "lassonet.lambda_start: must be > 0".into(),
        );
        check(
            ln.lambda_factor > 1.0 && ln.lambda_factor.is_finite(),
            "lassonet.lambda_factor: must be > 1".into(),
        );
        check(ln.path_length >= 1, "lassonet.path_length: must be >= 1".into());
        check(ln.epochs_per_lambda >= 1, "lassonet.epochs_per_lambda: must be >= 1".into());
        let tn = &self.tabnet;
        check(
            !tn.lambda_sparse.is_empty(),
            "tabnet.lambda_sparse: need at least one value".into(),
        );
        for &l in &tn.lambda_sparse {
            if let Err(e) = tn.at(l).validate() {
                check(false, format!("tabnet: {e}"));
                break;
            }
        }
        check(
            !self.budgets.is_empty()
                && self.budgets.iter().all(|b| (0.0..=1.0).contains(b))
                && self.budgets.windows(2).all(|w| w[0] < w[1]),
            "budgets: must be strictly increasing values in [0, 1]".into(),
        );
        if errors.is_empty() {
            Ok(())
        } else {
            Err(CoreError::Config(errors))
        }
    }
}

/// Reads, validates and resolves a config file. Relative data and cost
/// paths are taken relative to the file's directory.
pub fn load_config(path: impl AsRef<Path>) -> Result<ExperimentConfig> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| CoreError::from(e).in_file(path))?;
    let mut config = ExperimentConfig::from_json(&text).map_err(|e| e.in_file(path))?;
    config.resolve_paths(path.parent().unwrap_or(Path::new(".")));
    config.validate()?;
    Ok(config)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn minimal() -> &'static str {
        r#"{"method": "gl2x", "data": {"synthetic": {"num_features": 10, "informative": 2}}}"#
    }

    #[test]
    fn minimal_config_fills_defaults() {
        let c = ExperimentConfig::from_json(minimal()).unwrap();
        c.validate().unwrap();
        assert_eq!(c.budget, 0.1);
        assert_eq!(c.widths, vec![512, 256, 128]);
        assert_eq!(c.seeds, vec![1, 2, 3, 4, 5]);
        assert_eq!(c.training.patience, Some(10));
        assert_eq!(c.fixed_k(46), 4);
        assert_eq!(c.fixed_k(136), 13);
        assert_eq!(c.fixed_k(5), 1);
        let echoed = serde_json::to_string(&c).unwrap();
        assert_eq!(ExperimentConfig::from_json(&echoed).unwrap(), c);
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let text = r#"{"method": "dnn", "budgett": 0.2}"#;
        assert!(matches!(ExperimentConfig::from_json(text), Err(CoreError::Config(_))));
        let text = r#"{"method": "dnn", "training": {"epoch": 3}}"#;
        assert!(ExperimentConfig::from_json(text).is_err());
        let text = r#"{"method": "ranknet"}"#;
        assert!(ExperimentConfig::from_json(text).is_err());
    }

    #[test]
    fn violations_name_their_fields() {
        let mut c = ExperimentConfig::from_json(minimal()).unwrap();
        c.budget = 1.5;
        c.seeds.clear();
        match c.validate() {
            Err(CoreError::Config(errs)) => {
                assert_eq!(errs.len(), 2, "{errs:?}");
                assert!(errs[0].starts_with("budget"));
                assert!(errs[1].starts_with("seeds"));
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn data_source_is_required() {
        let c = ExperimentConfig::new(MethodName::Dnn);
        assert!(c.validate().is_err());
        let mut c = ExperimentConfig::from_json(minimal()).unwrap();
        c.data.train = Some("a".into());
        assert!(c.validate().is_err());
    }

    #[test]
    fn relative_paths_follow_the_config_file() {
        let mut c = ExperimentConfig::new(MethodName::Dnn);
        c.data.train = Some("train.txt".into());
        c.data.valid = Some("/abs/valid.txt".into());
        c.resolve_paths(Path::new("/data/mq"));
        assert_eq!(c.data.train.unwrap(), PathBuf::from("/data/mq/train.txt"));
        assert_eq!(c.data.valid.unwrap(), PathBuf::from("/abs/valid.txt"));
    }

    #[test]
    fn lassonet_path_is_geometric() {
        let p = LassoNetConfig::default().path();
        assert_eq!(p.len(), 60);
        assert!((p[1] / p[0] - 1.25).abs() < 1e-12);
    }
}
