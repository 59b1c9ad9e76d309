use std::time::Instant;

use fsltr_tensor::RngState;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::config::ExperimentConfig;
use super::method::{AnyModel, MethodName, MethodSpec, ModelSpec};
use crate::data::{
    cost_of_selection, generate_synthetic, read_svmlight, transform_log1p, Dataset, FeatureCostTable, ParseOptions,
    Split, Splits, Standardizer, Transform,
};
use crate::error::{CoreError, Result};
use crate::ltr::{evaluate, train_model, EpochRecord, EvalReport, MeanStd, TrainConfig, DEFAULT_CUTOFFS};
use crate::model::{Model, Selection};
use crate::selectors::Ifg;

/// Reads or generates the three splits and applies the configured transforms.
pub fn load_splits(config: &ExperimentConfig) -> Result<Splits> {
    let data = &config.data;
    let raw = match (&data.train, &data.valid, &data.test, &data.synthetic) {
        (_, _, _, Some(spec)) => generate_synthetic(spec)?.splits,
        (Some(train), Some(valid), Some(test), None) => {
            let read = |path, split, width| {
                read_svmlight(
                    path,
                    ParseOptions {
                        num_features: width,
                        split,
                    },
                )
            };
            let train = read(train, Split::Train, None)?;
            let d = train.num_features;
            let mut held_out = Vec::with_capacity(2);
            for (path, split, key) in [(valid, Split::Valid, "data.valid"), (test, Split::Test, "data.test")] {
                let own = read(path, split, None)?;
                if own.num_features > d {
                    return Err(CoreError::Config(vec![format!(
                        "{key}: {} has {} features but the training split has {d}",
                        path.display(),
                        own.num_features
                    )]));
                }
                held_out.push(if own.num_features == d { own } else { read(path, split, Some(d))? });
            }
            let test = held_out.pop().unwrap();
            let valid = held_out.pop().unwrap();
            Splits { train, valid, test }
        }
        _ => {
            return Err(CoreError::Config(vec![
                "data: provide train, valid and test paths or a synthetic spec".into(),
            ]))
        }
    };
    apply_transforms(raw, config.transforms.log1p, config.transforms.standardize)
}

/// Applies `log1p` and then train-fitted standardization to all splits.
pub fn apply_transforms(mut splits: Splits, log1p: bool, standardize: bool) -> Result<Splits> {
    if log1p {
        if splits.train.transforms.contains(&Transform::Log1p) {
            return Err(CoreError::InvalidState("log1p transform applied twice".into()));
        }
        splits = splits.map(|ds| Ok(transform_log1p(ds)))?;
    }
    if standardize {
        let fitted = Standardizer::fit(&splits.train);
        splits = splits.map(|ds| fitted.apply(ds))?;
    }
    Ok(splits)
}

/// How test documents are masked when a local selector scores them.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EvalMasks {
    /// Deterministic top-k or thresholded masks.
    Deterministic,
    /// Masks drawn at the final temperature, seeded per query.
    Sampled,
}

/// Evaluates `model` on `dataset` at NDCG@1 and NDCG@10.
pub fn evaluate_model(
    model: &AnyModel,
    dataset: &Dataset,
    masks: EvalMasks,
    tau: f64,
    seed: u64,
) -> Result<EvalReport> {
    evaluate(dataset, &DEFAULT_CUTOFFS, |g| match masks {
        EvalMasks::Deterministic => model.score(&g.features),
        EvalMasks::Sampled => {
            let mut rng = RngState::new(seed ^ g.query_id.rotate_left(32));
            model.score_sampled(&g.features, tau, &mut rng)
        }
    })
}

/// One point of the LassoNet regularization path.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PathPoint {
    pub lambda: f64,
    pub num_features: usize,
    pub valid_ndcg10: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SeedResult {
    pub seed: u64,
    pub ndcg1: f64,
    pub ndcg10: f64,
    /// Selected-feature count under the method's counting rule.
    pub num_features: usize,
    pub valid_ndcg10: f64,
    pub best_epoch: usize,
    pub spec: ModelSpec,
    pub selection: Selection,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub lambda_path: Vec<PathPoint>,
    pub history: Vec<EpochRecord>,
}

/// A hyperparameter setting tried during the grid search.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridPoint {
    pub hyper: MethodSpec,
    pub valid_ndcg10_mean: f64,
    pub num_features_mean: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunResult {
    pub method: MethodName,
    pub input_features: usize,
    pub eval_masks: EvalMasks,
    pub ndcg1: MeanStd,
    pub ndcg10: MeanStd,
    pub num_features: MeanStd,
    pub grid: Vec<GridPoint>,
    /// Index into `grid` of the reported setting.
    pub chosen: usize,
    pub seeds: Vec<SeedResult>,
    #[serde(skip)]
    pub wall_clock_seconds: f64,
}

/// A finished Scenario 1 run: the report plus each seed's trained model.
#[derive(Clone, Debug)]
pub struct RunOutput {
    pub result: RunResult,
    pub models: Vec<AnyModel>,
}

impl RunResult {
    fn aggregate(&mut self) {
        let pick = |f: fn(&SeedResult) -> f64| MeanStd::of(&self.seeds.iter().map(f).collect::<Vec<_>>());
        self.ndcg1 = pick(|s| s.ndcg1);
        self.ndcg10 = pick(|s| s.ndcg10);
        self.num_features = pick(|s| s.num_features as f64);
    }
}

/// Hyperparameter settings searched for `config.method` on `d` features.
pub fn grid(config: &ExperimentConfig, d: usize) -> Vec<MethodSpec> {
    let k = config.fixed_k(d).min(d);
    match config.method {
        MethodName::Dnn => vec![MethodSpec::Dnn],
        MethodName::L2x => vec![MethodSpec::L2x { k }],
        MethodName::Gl2x => vec![MethodSpec::Gl2x { k }],
        MethodName::Cae => vec![MethodSpec::Cae { k }],
        MethodName::Ifg => {
            let groups = config.ifg.groups.unwrap_or_else(|| Ifg::default_groups(d));
            config
                .ifg
                .group_budgets
                .iter()
                .filter(|&&b| b <= groups)
                .map(|&group_budget| MethodSpec::Ifg {
                    groups,
                    group_budget,
                    lambda_rec: config.ifg.lambda_rec,
                })
                .collect()
        }
        MethodName::Invase => config
            .invase
            .lambdas
            .iter()
            .map(|&lambda| MethodSpec::Invase { lambda })
            .collect(),
        MethodName::Lassonet => vec![MethodSpec::Lassonet {
            hierarchy: config.lassonet.hierarchy,
            lambda: 0.0,
        }],
        MethodName::Tabnet => config
            .tabnet
            .lambda_sparse
            .iter()
            .map(|&l| MethodSpec::Tabnet(config.tabnet.at(l)))
            .collect(),
    }
}

struct Trained {
    model: AnyModel,
    result: SeedResult,
}

fn finish(
    config: &ExperimentConfig,
    splits: &Splits,
    seed: u64,
    spec: ModelSpec,
    model: AnyModel,
    best_epoch: usize,
    history: Vec<EpochRecord>,
) -> Result<Trained> {
    let masks = eval_masks(config);
    let tau = config.tau.final_tau();
    let valid = evaluate_model(&model, &splits.valid, EvalMasks::Deterministic, tau, seed)?;
    let test = evaluate_model(&model, &splits.test, masks, tau, seed)?;
    let selection = model.extract_selection(&splits.train)?;
    Ok(Trained {
        result: SeedResult {
            seed,
            ndcg1: test.ndcg_at(1),
            ndcg10: test.ndcg_at(10),
            num_features: selection.num_selected(),
            valid_ndcg10: valid.ndcg_at(10),
            best_epoch,
            spec,
            selection,
            lambda_path: Vec::new(),
            history,
        },
        model,
    })
}

fn eval_masks(config: &ExperimentConfig) -> EvalMasks {
    if config.sample_eval_masks {
        EvalMasks::Sampled
    } else {
        EvalMasks::Deterministic
    }
}

fn model_spec(config: &ExperimentConfig, d: usize, hyper: MethodSpec) -> ModelSpec {
    ModelSpec {
        input_width: d,
        widths: config.widths.clone(),
        adam: config.training.adam,
        hyper,
    }
}

/// Trains one seed at one grid point.
pub fn train_seed(config: &ExperimentConfig, splits: &Splits, hyper: MethodSpec, seed: u64) -> Result<(AnyModel, SeedResult)> {
    let spec = model_spec(config, splits.num_features(), hyper);
    let mut rng = RngState::new(seed);
    let model = AnyModel::build(&spec, &mut rng)?;
    let outcome = train_model(model, &splits.train, &splits.valid, &config.train_config(), &mut rng)?;
    let t = finish(config, splits, seed, spec, outcome.model, outcome.best_epoch, outcome.history)?;
    Ok((t.model, t.result))
}

/// Dense warm start, then the geometric λ path until no feature survives.
/// Reports the first path point within the fixed budget, or the sparsest
/// point if none is.
pub fn train_lassonet_path(config: &ExperimentConfig, splits: &Splits, seed: u64) -> Result<(AnyModel, SeedResult)> {
    let d = splits.num_features();
    let hierarchy = config.lassonet.hierarchy;
    let mut rng = RngState::new(seed);
    let dense = model_spec(config, d, MethodSpec::Lassonet { hierarchy, lambda: 0.0 });
    let model = AnyModel::build(&dense, &mut rng)?;
    let outcome = train_model(model, &splits.train, &splits.valid, &config.train_config(), &mut rng)?;
    let mut history = outcome.history;
    let mut model = outcome.model;
    let step = TrainConfig {
        epochs: config.lassonet.epochs_per_lambda,
        patience: None,
        restore_best: false,
        tau: config.tau,
    };
    let target = config.fixed_k(d);
    let mut path = Vec::new();
    let mut chosen: Option<(AnyModel, f64, usize)> = None;
    let mut last: Option<(AnyModel, f64, usize)> = None;
    for lambda in config.lassonet.path() {
        if let AnyModel::Lassonet(net) = &mut model {
            net.lambda = lambda;
        }
        let offset = history.len();
        let stage = train_model(model, &splits.train, &splits.valid, &step, &mut rng)?;
        history.extend(stage.history.into_iter().map(|mut r| {
            r.epoch += offset;
            r
        }));
        model = stage.model;
        let count = model.extract_selection(&splits.train)?.num_selected();
        let valid = evaluate_model(&model, &splits.valid, EvalMasks::Deterministic, 1.0, seed)?;
        path.push(PathPoint {
            lambda,
            num_features: count,
            valid_ndcg10: valid.ndcg_at(10),
        });
        let point = (model.clone(), lambda, history.len());
        if chosen.is_none() && count <= target {
            chosen = Some(point.clone());
        }
        last = Some(point);
        if count == 0 {
            break;
        }
    }
    let (model, lambda, epoch) = chosen.or(last).expect("lambda path is non-empty");
    let spec = model_spec(config, d, MethodSpec::Lassonet { hierarchy, lambda });
    let mut t = finish(config, splits, seed, spec, model, epoch, history)?;
    t.result.lambda_path = path;
    Ok((t.model, t.result))
}

/// Joint train-and-select over every seed and grid point. The reported grid
/// point has the highest mean validation NDCG@10, the first one on ties.
pub fn run_scenario1(config: &ExperimentConfig, splits: &Splits) -> Result<RunOutput> {
    let start = Instant::now();
    let d = splits.num_features();
    let points = grid(config, d);
    if points.is_empty() {
        return Err(CoreError::Config(vec![format!(
            "{}: empty hyperparameter grid for {d} features",
            config.method
        )]));
    }
    let jobs: Vec<(usize, u64)> = (0..points.len())
        .flat_map(|p| config.seeds.iter().map(move |&s| (p, s)))
        .collect();
    let trained: Vec<(AnyModel, SeedResult)> = jobs
        .par_iter()
        .map(|&(p, seed)| {
            let run = if config.method == MethodName::Lassonet {
                train_lassonet_path(config, splits, seed)
            } else {
                train_seed(config, splits, points[p].clone(), seed)
            };
            run.map_err(|e| match e {
                CoreError::Divergence(msg) => CoreError::Divergence(format!("seed {seed}: {msg}")),
                other => other,
            })
        })
        .collect::<Result<_>>()?;
    let per_point: Vec<&[(AnyModel, SeedResult)]> = trained.chunks(config.seeds.len()).collect();
    let grid: Vec<GridPoint> = points
        .iter()
        .zip(&per_point)
        .map(|(hyper, runs)| {
            let n = runs.len() as f64;
            GridPoint {
                hyper: hyper.clone(),
                valid_ndcg10_mean: runs.iter().map(|(_, r)| r.valid_ndcg10).sum::<f64>() / n,
                num_features_mean: runs.iter().map(|(_, r)| r.num_features as f64).sum::<f64>() / n,
            }
        })
        .collect();
    let chosen = grid
        .iter()
        .enumerate()
        .fold(0, |best, (i, p)| if p.valid_ndcg10_mean > grid[best].valid_ndcg10_mean { i } else { best });
    let (models, seeds): (Vec<_>, Vec<_>) = per_point[chosen].iter().cloned().unzip();
    let mut result = RunResult {
        method: config.method,
        input_features: d,
        eval_masks: eval_masks(config),
        ndcg1: MeanStd::default(),
        ndcg10: MeanStd::default(),
        num_features: MeanStd::default(),
        grid,
        chosen,
        seeds,
        wall_clock_seconds: 0.0,
    };
    result.aggregate();
    result.wall_clock_seconds = start.elapsed().as_secs_f64();
    Ok(RunOutput { result, models })
}

/// Feature count for budget fraction `b`: `ceil(b·d)`, capped at `d`.
pub fn budget_count(b: f64, d: usize) -> usize {
    let raw = b * d as f64;
    let nearest = raw.round();
    let count = if (raw - nearest).abs() < 1e-9 { nearest } else { raw.ceil() };
    (count as usize).min(d)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BudgetPoint {
    pub budget: f64,
    /// Features kept by the hard mask, ascending.
    pub features: Vec<usize>,
    pub ndcg1: f64,
    pub ndcg10: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cost: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SeedCurve {
    pub seed: u64,
    pub points: Vec<BudgetPoint>,
}

/// Seed-averaged point of a budget curve.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CurvePoint {
    pub budget: f64,
    pub num_features: usize,
    pub ndcg1: f64,
    pub ndcg10: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cost: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BudgetCurve {
    pub method: MethodName,
    pub eval_masks: EvalMasks,
    pub points: Vec<CurvePoint>,
    pub seeds: Vec<SeedCurve>,
}

/// Re-evaluates each seed's trained model with only the top `ceil(b·d)`
/// features by the seed's selection values present; the rest are zeroed.
pub fn run_scenario2(
    config: &ExperimentConfig,
    splits: &Splits,
    run: &RunResult,
    models: &[AnyModel],
    budgets: &[f64],
    costs: Option<&FeatureCostTable>,
) -> Result<BudgetCurve> {
    let d = splits.num_features();
    if budgets.is_empty() || !budgets.iter().all(|b| (0.0..=1.0).contains(b)) {
        return Err(CoreError::Config(vec!["budgets: need values in [0, 1]".into()]));
    }
    if !budgets.windows(2).all(|w| w[0] < w[1]) {
        return Err(CoreError::Config(vec!["budgets: must be strictly increasing".into()]));
    }
    if models.len() != run.seeds.len() {
        return Err(CoreError::InvalidArgument(format!(
            "{} models for {} seeds",
            models.len(),
            run.seeds.len()
        )));
    }
    if run.input_features != d {
        return Err(CoreError::Config(vec![format!(
            "run was trained on {} features, data has {d}",
            run.input_features
        )]));
    }
    if let Some(c) = costs {
        if c.len() != d {
            return Err(CoreError::Config(vec![format!("cost table has {} entries for {d} features", c.len())]));
        }
    }
    let tau = config.tau.final_tau();
    let seeds: Vec<SeedCurve> = run
        .seeds
        .par_iter()
        .zip(models)
        .map(|(sr, model)| {
            let points = budgets
                .iter()
                .map(|&budget| {
                    let mask = sr.selection.budget_mask(budget_count(budget, d));
                    let test = splits.test.mask_features(&mask)?;
                    let report = evaluate_model(model, &test, run.eval_masks, tau, sr.seed)?;
                    Ok(BudgetPoint {
                        budget,
                        features: (0..d).filter(|&j| mask[j]).collect(),
                        ndcg1: report.ndcg_at(1),
                        ndcg10: report.ndcg_at(10),
                        cost: costs.map(|c| cost_of_selection(&mask, c)).transpose()?,
                    })
                })
                .collect::<Result<Vec<_>>>()?;
            Ok(SeedCurve { seed: sr.seed, points })
        })
        .collect::<Result<_>>()?;
    let n = seeds.len() as f64;
    let points = budgets
        .iter()
        .enumerate()
        .map(|(i, &budget)| {
            let mean = |f: fn(&BudgetPoint) -> f64| seeds.iter().map(|s| f(&s.points[i])).sum::<f64>() / n;
            CurvePoint {
                budget,
                num_features: budget_count(budget, d),
                ndcg1: mean(|p| p.ndcg1),
                ndcg10: mean(|p| p.ndcg10),
                cost: costs.map(|_| mean(|p| p.cost.unwrap_or(0.0))),
            }
        })
        .collect();
    Ok(BudgetCurve {
        method: run.method,
        eval_masks: run.eval_masks,
        points,
        seeds,
    })
}
