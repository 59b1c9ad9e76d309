use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};
use fsltr_core::data::{generate_synthetic, read_cost_csv, write_svmlight, SyntheticSpec};
use fsltr_core::harness::{
    load_run, load_splits, render, run_scenario1, run_scenario2, write_curve, write_run, ExperimentConfig, MethodName,
};
use fsltr_core::CoreError;
use serde_json::{json, Value};

/// Feature selection for neural learning-to-rank.
#[derive(Parser, Debug)]
#[command(name = "fsltr", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Jointly train a selector and ranker over every seed.
    Train(TrainArgs),
    /// Re-evaluate a trained run with only a budget of features present.
    BudgetEval(BudgetArgs),
    /// Generate a synthetic ranking dataset with planted features.
    Synth(SynthArgs),
    /// Re-render CSV reports from results.json files.
    Report(ReportArgs),
}

#[derive(Args, Debug)]
struct TrainArgs {
    /// JSON experiment config; flags below override its keys.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    method: Option<MethodName>,
    #[arg(long)]
    train: Option<PathBuf>,
    #[arg(long)]
    valid: Option<PathBuf>,
    #[arg(long)]
    test: Option<PathBuf>,
    #[arg(long)]
    log1p: bool,
    #[arg(long)]
    standardize: bool,
    #[arg(long)]
    budget: Option<f64>,
    #[arg(long)]
    k: Option<usize>,
    #[arg(long, value_delimiter = ',')]
    widths: Option<Vec<usize>>,
    #[arg(long)]
    epochs: Option<usize>,
    #[arg(long)]
    patience: Option<usize>,
    #[arg(long)]
    lr: Option<f64>,
    #[arg(long, value_delimiter = ',')]
    seeds: Option<Vec<u64>>,
    #[arg(long)]
    cost_table: Option<PathBuf>,
    #[arg(long)]
    output_dir: Option<PathBuf>,
    /// Score test documents with sampled masks.
    #[arg(long)]
    sample_eval_masks: bool,
}

#[derive(Args, Debug)]
struct BudgetArgs {
    /// Output directory of a `train` run.
    #[arg(long)]
    run: PathBuf,
    /// Budget fractions; defaults to the run's configured budgets.
    #[arg(long, value_delimiter = ',')]
    budgets: Option<Vec<f64>>,
    #[arg(long)]
    cost_table: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct SynthArgs {
    /// Directory for train.txt, valid.txt, test.txt and informative.json.
    #[arg(long)]
    out: PathBuf,
    /// JSON generator spec; flags below override its keys.
    #[arg(long)]
    spec: Option<PathBuf>,
    #[arg(long)]
    features: Option<usize>,
    #[arg(long)]
    informative: Option<usize>,
    #[arg(long)]
    train_queries: Option<usize>,
    #[arg(long)]
    docs_per_query: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Args, Debug)]
struct ReportArgs {
    /// Run directories containing results.json.
    #[arg(required = true)]
    runs: Vec<PathBuf>,
    /// Destination directory; defaults to the first run directory.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn set(obj: &mut Value, path: &[&str], value: Value) {
    let mut cur = obj;
    for key in &path[..path.len() - 1] {
        let map = cur.as_object_mut().expect("config is an object");
        cur = map.entry(key.to_string()).or_insert_with(|| json!({}));
    }
    cur.as_object_mut()
        .expect("config section is an object")
        .insert(path[path.len() - 1].to_string(), value);
}

fn absolute(p: &Path) -> Result<PathBuf> {
    Ok(if p.is_absolute() { p.to_path_buf() } else { std::env::current_dir()?.join(p) })
}

fn build_config(args: &TrainArgs) -> Result<ExperimentConfig> {
    let mut value = match &args.config {
        Some(path) => {
            let text = fs::read_to_string(path).map_err(|e| CoreError::from(e).in_file(path))?;
            let mut config = ExperimentConfig::from_json(&text).map_err(|e| e.in_file(path))?;
            config.resolve_paths(&absolute(path)?.parent().map(Path::to_path_buf).unwrap_or_default());
            serde_json::to_value(config)?
        }
        None => {
            let method = args
                .method
                .ok_or_else(|| CoreError::Config(vec!["method: required without --config".into()]))?;
            serde_json::to_value(ExperimentConfig::new(method))?
        }
    };
    let path_value = |p: &PathBuf| -> Result<Value> { Ok(json!(absolute(p)?)) };
    if let Some(m) = args.method {
        set(&mut value, &["method"], json!(m));
    }
    for (key, p) in [("train", &args.train), ("valid", &args.valid), ("test", &args.test)] {
        if let Some(p) = p {
            set(&mut value, &["data", key], path_value(p)?);
        }
    }
    if args.log1p {
        set(&mut value, &["transforms", "log1p"], json!(true));
    }
    if args.standardize {
        set(&mut value, &["transforms", "standardize"], json!(true));
    }
    if let Some(b) = args.budget {
        set(&mut value, &["budget"], json!(b));
    }
    if let Some(k) = args.k {
        set(&mut value, &["k"], json!(k));
    }
    if let Some(w) = &args.widths {
        set(&mut value, &["widths"], json!(w));
    }
    if let Some(e) = args.epochs {
        set(&mut value, &["training", "epochs"], json!(e));
    }
    if let Some(p) = args.patience {
        set(&mut value, &["training", "patience"], json!(p));
    }
    if let Some(lr) = args.lr {
        set(&mut value, &["training", "adam", "lr"], json!(lr));
    }
    if let Some(s) = &args.seeds {
        set(&mut value, &["seeds"], json!(s));
    }
    if let Some(p) = &args.cost_table {
        set(&mut value, &["cost_table"], path_value(p)?);
    }
    if let Some(p) = &args.output_dir {
        set(&mut value, &["output_dir"], json!(p));
    }
    if args.sample_eval_masks {
        set(&mut value, &["sample_eval_masks"], json!(true));
    }
    let config: ExperimentConfig =
        serde_json::from_value(value).map_err(|e| CoreError::Config(vec![e.to_string()]))?;
    config.validate()?;
    Ok(config)
}

fn train(args: TrainArgs) -> Result<()> {
    let config = build_config(&args)?;
    let splits = load_splits(&config)?;
    log::info!(
        "{}: {} features, {} seeds, output {}",
        config.method,
        splits.num_features(),
        config.seeds.len(),
        config.output_dir.display()
    );
    let output = run_scenario1(&config, &splits)?;
    write_run(&config.output_dir, &config, &output)?;
    let r = &output.result;
    println!(
        "{} ndcg@1 {:.4} ({:.4}) ndcg@10 {:.4} ({:.4}) #F {} in {:.1}s -> {}",
        r.method,
        r.ndcg1.mean,
        r.ndcg1.std,
        r.ndcg10.mean,
        r.ndcg10.std,
        r.num_features.mean,
        r.wall_clock_seconds,
        config.output_dir.display()
    );
    Ok(())
}

fn budget_eval(args: BudgetArgs) -> Result<()> {
    let run = load_run(&args.run)?;
    let splits = load_splits(&run.config)?;
    let budgets = args.budgets.unwrap_or_else(|| run.config.budgets.clone());
    let cost_path = args.cost_table.or_else(|| run.config.cost_table.clone());
    let costs = match cost_path {
        Some(p) => Some(read_cost_csv(&p, splits.num_features())?),
        None => {
            log::warn!("no cost table given; the cost column is omitted");
            None
        }
    };
    let curve = run_scenario2(&run.config, &splits, &run.result, &run.models, &budgets, costs.as_ref())?;
    write_curve(&args.run, &curve)?;
    for p in &curve.points {
        let cost = p.cost.map(|c| format!(" cost {c}")).unwrap_or_default();
        println!(
            "budget {} ({} features) ndcg@1 {:.4} ndcg@10 {:.4}{cost}",
            p.budget, p.num_features, p.ndcg1, p.ndcg10
        );
    }
    Ok(())
}

fn synth(args: SynthArgs) -> Result<()> {
    let mut spec = match &args.spec {
        Some(path) => {
            let text = fs::read_to_string(path).with_context(|| path.display().to_string())?;
            serde_json::from_str(&text).map_err(|e| CoreError::Config(vec![e.to_string()]).in_file(path))?
        }
        None => SyntheticSpec::default(),
    };
    if let Some(v) = args.features {
        spec.num_features = v;
    }
    if let Some(v) = args.informative {
        spec.informative = v;
    }
    if let Some(v) = args.train_queries {
        spec.train_queries = v;
    }
    if let Some(v) = args.docs_per_query {
        spec.docs_per_query = v;
    }
    if let Some(v) = args.seed {
        spec.seed = v;
    }
    let data = generate_synthetic(&spec)?;
    fs::create_dir_all(&args.out).with_context(|| args.out.display().to_string())?;
    let s = &data.splits;
    for (name, ds) in [("train", &s.train), ("valid", &s.valid), ("test", &s.test)] {
        fs::write(args.out.join(format!("{name}.txt")), write_svmlight(ds))?;
    }
    let meta = json!({ "spec": spec, "informative": data.informative });
    fs::write(args.out.join("informative.json"), serde_json::to_string_pretty(&meta)? + "\n")?;
    println!("informative features {:?} -> {}", data.informative, args.out.display());
    Ok(())
}

fn report(args: ReportArgs) -> Result<()> {
    let out = args.out.unwrap_or_else(|| args.runs[0].clone());
    for path in render(&args.runs, &out)? {
        println!("{}", path.display());
    }
    Ok(())
}

fn error_line(err: &anyhow::Error) -> String {
    let (kind, message) = match err.downcast_ref::<CoreError>() {
        Some(e) => (e.kind(), e.to_string()),
        None => ("error", format!("{err:#}")),
    };
    json!({ "error": kind, "message": message }).to_string()
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::Train(a) => train(a),
        Command::BudgetEval(a) => budget_eval(a),
        Command::Synth(a) => synth(a),
        Command::Report(a) => report(a),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("{}", error_line(&err));
            ExitCode::FAILURE
        }
    }
}
