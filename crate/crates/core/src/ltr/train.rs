use fsltr_tensor::RngState;
use serde::{Deserialize, Serialize};

use super::metrics::{evaluate, EvalReport, DEFAULT_CUTOFFS};
use super::ranker::RankerModel;
use crate::data::Dataset;
use crate::error::{invalid, CoreError, Result};
use crate::model::Model;

/// Concrete-relaxation temperature over the course of training.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum TauSchedule {
    Fixed { tau: f64 },
    /// Geometric interpolation from `start` at the first epoch to `end` at the last.
    Anneal { start: f64, end: f64 },
}

impl Default for TauSchedule {
    fn default() -> Self {
        TauSchedule::Anneal { start: 10.0, end: 0.1 }
    }
}

impl TauSchedule {
    pub fn at(&self, epoch: usize, epochs: usize) -> f64 {
        match *self {
            TauSchedule::Fixed { tau } => tau,
            TauSchedule::Anneal { start, end } => {
                if epochs <= 1 {
                    return start;
                }
                let t = epoch.min(epochs - 1) as f64 / (epochs - 1) as f64;
                start * (end / start).powf(t)
            }
        }
    }

    /// Temperature used for sampled evaluation after training.
    pub fn final_tau(&self) -> f64 {
        match *self {
            TauSchedule::Fixed { tau } => tau,
            TauSchedule::Anneal { end, .. } => end,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let ok = |t: f64| t.is_finite() && t > 0.0;
        let valid = match *self {
            TauSchedule::Fixed { tau } => ok(tau),
            TauSchedule::Anneal { start, end } => ok(start) && ok(end),
        };
        if valid {
            Ok(())
        } else {
            Err(invalid("temperatures must be finite and > 0"))
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct TrainConfig {
    pub epochs: usize,
    /// Epochs without validation improvement before stopping; `None` runs
    /// every epoch.
    pub patience: Option<usize>,
    /// Return the best-validation parameters rather than the last ones.
    pub restore_best: bool,
    pub tau: TauSchedule,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            epochs: 50,
            patience: Some(10),
            restore_best: true,
            tau: TauSchedule::default(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    pub epoch: usize,
    pub tau: f64,
    /// Mean training objective over the epoch's steps.
    pub train_loss: f64,
    pub valid_ndcg10: f64,
}

#[derive(Clone, Debug)]
pub struct TrainOutcome<M> {
    /// Parameters from the epoch with the best validation NDCG@10, or from
    /// the last epoch when `restore_best` is off.
    pub model: M,
    pub best_epoch: usize,
    pub best_valid_ndcg10: f64,
    pub history: Vec<EpochRecord>,
}

/// Runs epochs of shuffled one-query steps with early stopping on
/// validation NDCG@10.
///
/// Queries whose labels are all zero contribute no ranking signal and are
/// skipped.
pub fn train_model<M: Model>(
    mut model: M,
    train: &Dataset,
    valid: &Dataset,
    config: &TrainConfig,
    rng: &mut RngState,
) -> Result<TrainOutcome<M>> {
    if config.epochs == 0 {
        return Err(invalid("epochs must be >= 1"));
    }
    config.tau.validate()?;
    let mut order: Vec<usize> = (0..train.groups.len())
        .filter(|&i| train.groups[i].has_relevant())
        .collect();
    let mut best: Option<(Option<M>, usize, f64)> = None;
    let mut history = Vec::with_capacity(config.epochs);
    for epoch in 0..config.epochs {
        let tau = config.tau.at(epoch, config.epochs);
        rng.shuffle(&mut order);
        let mut total = 0.0;
        for &qi in &order {
            let group = &train.groups[qi];
            total += model.train_step(group, tau, rng).map_err(|e| match e {
                CoreError::Divergence(msg) => CoreError::Divergence(format!(
                    "epoch {}, query {}: {msg}",
                    epoch + 1,
                    group.query_id
                )),
                other => other,
            })?;
        }
        let train_loss = if order.is_empty() { 0.0 } else { total / order.len() as f64 };
        let valid_ndcg10 = evaluate(valid, &[10], |g| model.score(&g.features))?.ndcg_at(10);
        log::debug!(
            "epoch {} tau {tau:.4} loss {train_loss:.6} valid ndcg@10 {valid_ndcg10:.4}",
            epoch + 1
        );
        history.push(EpochRecord {
            epoch: epoch + 1,
            tau,
            train_loss,
            valid_ndcg10,
        });
        let improved = best.as_ref().map_or(true, |(_, _, b)| valid_ndcg10 > *b);
        if improved {
            let snapshot = if config.restore_best { Some(model.clone()) } else { None };
            best = Some((snapshot, epoch + 1, valid_ndcg10));
        } else if let Some(patience) = config.patience {
            if epoch + 1 - best.as_ref().unwrap().1 >= patience {
                break;
            }
        }
    }
    let (snapshot, best_epoch, best_valid_ndcg10) = best.expect("at least one epoch");
    let model = snapshot.unwrap_or(model);
    Ok(TrainOutcome {
        model,
        best_epoch,
        best_valid_ndcg10,
        history,
    })
}

/// Trains the plain ranker and reports it on the validation split.
pub fn train_ranker(
    model: RankerModel,
    train: &Dataset,
    valid: &Dataset,
    config: &TrainConfig,
    rng: &mut RngState,
) -> Result<(RankerModel, EvalReport)> {
    let outcome = train_model(model, train, valid, config, rng)?;
    let report = evaluate(valid, &DEFAULT_CUTOFFS, |g| outcome.model.score(&g.features))?;
    Ok((outcome.model, report))
}
