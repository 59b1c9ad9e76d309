use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn fsltr(args: &[&str], cwd: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_fsltr"))
        .args(args)
        .current_dir(cwd)
        .env("RUST_LOG", "warn")
        .output()
        .expect("binary runs")
}

fn ok(args: &[&str], cwd: &Path) -> String {
    let out = fsltr(args, cwd);
    assert!(
        out.status.success(),
        "{args:?}: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn error_json(args: &[&str], cwd: &Path) -> Value {
    let out = fsltr(args, cwd);
    assert_eq!(out.status.code(), Some(1), "{args:?}");
    let stderr = String::from_utf8(out.stderr).unwrap();
    let line = stderr.lines().last().expect("error line");
    serde_json::from_str(line).unwrap_or_else(|e| panic!("{e}: {stderr}"))
}

fn synth(dir: &Path) {
    ok(
        &[
            "synth", "--out", "data", "--features", "12", "--informative", "3", "--train-queries", "16",
            "--docs-per-query", "8", "--seed", "2",
        ],
        dir,
    );
}

fn train_args<'a>(method: &'a str, out: &'a str) -> Vec<&'a str> {
    vec![
        "train", "--method", method, "--train", "data/train.txt", "--valid", "data/valid.txt", "--test",
        "data/test.txt", "--widths", "8", "--epochs", "2", "--seeds", "1,2", "--budget", "0.25", "--output-dir", out,
    ]
}

#[test]
fn synth_train_budget_eval_report() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    synth(dir);
    for f in ["train.txt", "valid.txt", "test.txt", "informative.json"] {
        assert!(dir.join("data").join(f).exists(), "{f}");
    }
    let meta: Value = serde_json::from_str(&fs::read_to_string(dir.join("data/informative.json")).unwrap()).unwrap();
    assert_eq!(meta["informative"].as_array().unwrap().len(), 3);

    let stdout = ok(&train_args("gl2x", "run"), dir);
    assert!(stdout.starts_with("gl2x ndcg@1"), "{stdout}");
    let run = dir.join("run");
    let results: Value = serde_json::from_str(&fs::read_to_string(run.join("results.json")).unwrap()).unwrap();
    let s1 = &results["scenario1"];
    assert_eq!(s1["method"], "gl2x");
    assert_eq!(s1["num_features"]["mean"], 3.0);
    assert_eq!(s1["seeds"].as_array().unwrap().len(), 2);
    assert!(run.join("seed-1/frequency.csv").exists() || run.join("seed-1/importance.csv").exists());

    fs::write(dir.join("costs.csv"), (0..12).map(|j| format!("{},{}\n", j + 1, j + 1)).collect::<String>()).unwrap();
    let stdout = ok(
        &["budget-eval", "--run", "run", "--budgets", "0,0.5,1", "--cost-table", "costs.csv"],
        dir,
    );
    assert_eq!(stdout.lines().count(), 3);
    let results: Value = serde_json::from_str(&fs::read_to_string(run.join("results.json")).unwrap()).unwrap();
    let points = results["scenario2"]["points"].as_array().unwrap();
    assert_eq!(points[2]["ndcg10"], results["scenario1"]["ndcg10"]["mean"]);
    assert_eq!(points[2]["cost"], 78.0);
    assert_eq!(points[0]["cost"], 0.0);
    let curve = fs::read_to_string(run.join("curve.csv")).unwrap();
    assert_eq!(curve.lines().next(), Some("budget,ndcg1,ndcg10,cost"));
    assert_eq!(curve.lines().count(), 4);

    ok(&train_args("invase", "run2"), dir);
    let stdout = ok(&["report", "run", "run2", "--out", "report"], dir);
    assert_eq!(stdout.lines().count(), 2);
    let table = fs::read_to_string(dir.join("report/table.csv")).unwrap();
    let methods: Vec<_> = table.lines().skip(1).map(|l| l.split(',').next().unwrap()).collect();
    assert_eq!(methods, ["gl2x", "invase"]);
    assert!(dir.join("report/curve.csv").exists());
}

#[test]
fn config_file_with_overrides() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    synth(dir);
    fs::create_dir(dir.join("cfg")).unwrap();
    fs::write(
        dir.join("cfg/exp.json"),
        r#"{"method": "l2x", "data": {"train": "../data/train.txt", "valid": "../data/valid.txt",
            "test": "../data/test.txt"}, "k": 2, "widths": [6], "training": {"epochs": 1}, "seeds": [5]}"#,
    )
    .unwrap();
    ok(&["train", "--config", "cfg/exp.json", "--epochs", "2", "--output-dir", "out"], dir);
    let config: Value = serde_json::from_str(&fs::read_to_string(dir.join("out/config.json")).unwrap()).unwrap();
    assert_eq!(config["k"], 2);
    assert_eq!(config["training"]["epochs"], 2);
    assert_eq!(config["seeds"], serde_json::json!([5]));
    assert!(Path::new(config["data"]["train"].as_str().unwrap()).is_absolute());
}

#[test]
fn failures_report_json_errors() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    synth(dir);
    let mut args = train_args("dnn", "bad");
    let budget = args.iter().position(|a| *a == "0.25").unwrap();
    args[budget] = "1.5";
    let err = error_json(&args, dir);
    assert_eq!(err["error"], "config");
    assert!(err["message"].as_str().unwrap().contains("budget"));

    let err = error_json(&["train", "--epochs", "1"], dir);
    assert_eq!(err["error"], "config");

    fs::write(dir.join("broken.txt"), "1 qid:1 1:0.5\n2 qid:x 1:0.1\n").unwrap();
    let mut args = train_args("dnn", "bad");
    args[4] = "broken.txt";
    let err = error_json(&args, dir);
    assert_eq!(err["error"], "parse");
    let message = err["message"].as_str().unwrap();
    assert!(message.contains("broken.txt") && message.matches("line 2").count() == 1, "{message}");

    let err = error_json(&["budget-eval", "--run", "missing"], dir);
    assert_eq!(err["error"], "io");

    ok(&train_args("dnn", "run"), dir);
    let err = error_json(&["budget-eval", "--run", "run", "--budgets", "0.5,0.2"], dir);
    assert_eq!(err["error"], "config");
    assert!(err["message"].as_str().unwrap().contains("increasing"));
}

#[test]
fn repeated_runs_are_byte_identical() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    synth(dir);
    let mut texts = Vec::new();
    for out in ["a", "b"] {
        ok(&train_args("tabnet", out), dir);
        ok(&["budget-eval", "--run", out, "--budgets", "0.5,1"], dir);
        texts.push(fs::read(dir.join(out).join("results.json")).unwrap());
    }
    assert_eq!(texts[0], texts[1]);
}
