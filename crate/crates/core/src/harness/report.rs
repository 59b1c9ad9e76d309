use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use fsltr_tensor::{checkpoint, RngState};
use serde::{Deserialize, Serialize};

use super::config::ExperimentConfig;
use super::method::{AnyModel, ModelSpec};
use super::scenario::{BudgetCurve, RunOutput, RunResult};
use crate::error::{CoreError, Result};
use crate::model::{Model, SelectionKind};

pub const RESULTS_FILE: &str = "results.json";
pub const CONFIG_FILE: &str = "config.json";
pub const TABLE_FILE: &str = "table.csv";
pub const CURVE_FILE: &str = "curve.csv";
pub const TIMING_FILE: &str = "timing.json";
const MODEL_STEM: &str = "model";
const SPEC_KEY: &str = "model_spec";

/// Contents of `results.json`.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Results {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scenario1: Option<RunResult>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scenario2: Option<BudgetCurve>,
}

/// A trained run read back from its output directory.
#[derive(Clone, Debug)]
pub struct LoadedRun {
    pub config: ExperimentConfig,
    pub result: RunResult,
    pub models: Vec<AnyModel>,
}

fn io_at<T>(path: &Path, r: std::io::Result<T>) -> Result<T> {
    r.map_err(|e| CoreError::from(e).in_file(path))
}

fn write_file(path: &Path, contents: impl AsRef<[u8]>) -> Result<()> {
    io_at(path, fs::write(path, contents))
}

fn to_json<T: Serialize>(value: &T) -> Result<String> {
    Ok(serde_json::to_string_pretty(value)? + "\n")
}

fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    let text = io_at(path, fs::read_to_string(path))?;
    serde_json::from_str(&text).map_err(|e| CoreError::from(e).in_file(path))
}

pub fn seed_dir(dir: &Path, seed: u64) -> PathBuf {
    dir.join(format!("seed-{seed}"))
}

fn csv_text(header: &[&str], rows: impl IntoIterator<Item = Vec<String>>) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header)?;
    for row in rows {
        w.write_record(&row)?;
    }
    let bytes = w.into_inner().map_err(|e| CoreError::Io(e.into_error()))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

/// One row per run: `method,ndcg1_mean,ndcg1_std,ndcg10_mean,ndcg10_std,num_features`.
pub fn table_csv(runs: &[&RunResult]) -> Result<String> {
    csv_text(
        &["method", "ndcg1_mean", "ndcg1_std", "ndcg10_mean", "ndcg10_std", "num_features"],
        runs.iter().map(|r| {
            vec![
                r.method.to_string(),
                r.ndcg1.mean.to_string(),
                r.ndcg1.std.to_string(),
                r.ndcg10.mean.to_string(),
                r.ndcg10.std.to_string(),
                r.num_features.mean.to_string(),
            ]
        }),
    )
}

/// `budget,ndcg1,ndcg10,cost`; the cost cell is empty without a cost table.
pub fn curve_csv(curve: &BudgetCurve) -> Result<String> {
    csv_text(
        &["budget", "ndcg1", "ndcg10", "cost"],
        curve.points.iter().map(|p| {
            vec![
                p.budget.to_string(),
                p.ndcg1.to_string(),
                p.ndcg10.to_string(),
                p.cost.map(|c| c.to_string()).unwrap_or_default(),
            ]
        }),
    )
}

/// Writes the resolved config, `results.json`, `table.csv`, timing, and each
/// seed's checkpoint and selection vector into `dir`.
pub fn write_run(dir: &Path, config: &ExperimentConfig, output: &RunOutput) -> Result<()> {
    io_at(dir, fs::create_dir_all(dir))?;
    let run = &output.result;
    write_file(&dir.join(CONFIG_FILE), to_json(config)?)?;
    let results = Results {
        scenario1: Some(run.clone()),
        scenario2: None,
    };
    write_file(&dir.join(RESULTS_FILE), to_json(&results)?)?;
    write_file(&dir.join(TABLE_FILE), table_csv(&[run])?)?;
    let timing = serde_json::json!({ "scenario1_seconds": run.wall_clock_seconds });
    write_file(&dir.join(TIMING_FILE), to_json(&timing)?)?;
    let stale = dir.join(CURVE_FILE);
    if stale.exists() {
        io_at(&stale, fs::remove_file(&stale))?;
    }
    for (seed, model) in run.seeds.iter().zip(&output.models) {
        let sdir = seed_dir(dir, seed.seed);
        io_at(&sdir, fs::create_dir_all(&sdir))?;
        let metadata = BTreeMap::from([(SPEC_KEY.to_string(), serde_json::to_string(&seed.spec)?)]);
        checkpoint::save(model.store(), metadata, &sdir, MODEL_STEM).map_err(|e| CoreError::from(e).in_file(&sdir))?;
        let column = match seed.selection.kind {
            SelectionKind::Frequency => "frequency",
            SelectionKind::Importance => "importance",
        };
        let rows = seed
            .selection
            .values
            .iter()
            .enumerate()
            .map(|(j, v)| vec![j.to_string(), v.to_string()]);
        write_file(&sdir.join(format!("{column}.csv")), csv_text(&["feature_index", column], rows)?)?;
        if !seed.lambda_path.is_empty() {
            let rows = seed
                .lambda_path
                .iter()
                .map(|p| vec![p.lambda.to_string(), p.num_features.to_string(), p.valid_ndcg10.to_string()]);
            write_file(
                &sdir.join("lambda_path.csv"),
                csv_text(&["lambda", "num_features", "ndcg10"], rows)?,
            )?;
        }
    }
    Ok(())
}

pub fn read_results(dir: &Path) -> Result<Results> {
    read_json(&dir.join(RESULTS_FILE))
}

/// Rebuilds a model from a checkpoint directory written by [`write_run`].
pub fn load_model(dir: &Path) -> Result<(ModelSpec, AnyModel)> {
    let (manifest, entries) = checkpoint::load(dir, MODEL_STEM).map_err(|e| CoreError::from(e).in_file(dir))?;
    let spec_json = manifest.metadata.get(SPEC_KEY).ok_or_else(|| {
        CoreError::File {
            path: dir.to_path_buf(),
            source: Box::new(CoreError::InvalidState(format!("checkpoint has no {SPEC_KEY:?} metadata"))),
        }
    })?;
    let spec: ModelSpec = serde_json::from_str(spec_json).map_err(|e| CoreError::from(e).in_file(dir))?;
    let mut model = AnyModel::build(&spec, &mut RngState::new(0))?;
    model
        .store_mut()
        .load_named(entries)
        .map_err(|e| CoreError::from(e).in_file(dir))?;
    Ok((spec, model))
}

/// Reads the config, Scenario 1 results and every seed's model from `dir`.
pub fn load_run(dir: &Path) -> Result<LoadedRun> {
    let config: ExperimentConfig = read_json(&dir.join(CONFIG_FILE))?;
    config.validate()?;
    let result = read_results(dir)?.scenario1.ok_or_else(|| CoreError::File {
        path: dir.join(RESULTS_FILE),
        source: Box::new(CoreError::InvalidState("no scenario1 results".into())),
    })?;
    let models = result
        .seeds
        .iter()
        .map(|s| {
            let sdir = seed_dir(dir, s.seed);
            let (spec, model) = load_model(&sdir)?;
            if spec != s.spec {
                return Err(CoreError::File {
                    path: sdir,
                    source: Box::new(CoreError::InvalidState("checkpoint does not match results.json".into())),
                });
            }
            Ok(model)
        })
        .collect::<Result<_>>()?;
    Ok(LoadedRun { config, result, models })
}

/// Stores `curve` in `results.json` and writes `curve.csv`.
pub fn write_curve(dir: &Path, curve: &BudgetCurve) -> Result<()> {
    let mut results = read_results(dir)?;
    results.scenario2 = Some(curve.clone());
    write_file(&dir.join(RESULTS_FILE), to_json(&results)?)?;
    write_file(&dir.join(CURVE_FILE), curve_csv(curve)?)
}

/// Re-renders CSVs from the `results.json` of each run directory into `out`:
/// one `table.csv` row per run, and a curve file per run with a budget curve.
pub fn render(dirs: &[PathBuf], out: &Path) -> Result<Vec<PathBuf>> {
    let loaded = dirs
        .iter()
        .map(|d| Ok((d, read_results(d)?)))
        .collect::<Result<Vec<_>>>()?;
    io_at(out, fs::create_dir_all(out))?;
    let mut written = Vec::new();
    let runs: Vec<&RunResult> = loaded.iter().filter_map(|(_, r)| r.scenario1.as_ref()).collect();
    if !runs.is_empty() {
        let path = out.join(TABLE_FILE);
        write_file(&path, table_csv(&runs)?)?;
        written.push(path);
    }
    let curves: Vec<_> = loaded
        .iter()
        .filter_map(|(d, r)| r.scenario2.as_ref().map(|c| (d, c)))
        .collect();
    for (dir, curve) in &curves {
        let name = if curves.len() == 1 {
            CURVE_FILE.to_string()
        } else {
            let stem = dir.file_name().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
            format!("curve-{stem}.csv")
        };
        let path = out.join(name);
        write_file(&path, curve_csv(curve)?)?;
        written.push(path);
    }
    if written.is_empty() {
        return Err(CoreError::InvalidArgument("no results to report".into()));
    }
    Ok(written)
}
