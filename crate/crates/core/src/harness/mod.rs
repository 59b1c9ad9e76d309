//! Experiment orchestration: configuration, joint train-and-select runs,
//! budgeted evaluation and reports.

pub mod config;
pub mod method;
pub mod report;
pub mod scenario;

pub use config::{
    load_config, DataConfig, ExperimentConfig, IfgConfig, InvaseConfig, LassoNetConfig, TabNetGrid,
    TrainingConfig, TransformConfig,
};
pub use method::{AnyModel, MethodName, MethodProperties, MethodSpec, ModelSpec};
pub use scenario::{
    apply_transforms, budget_count, evaluate_model, grid, load_splits, run_scenario1, run_scenario2, train_lassonet_path,
    train_seed, BudgetCurve, BudgetPoint, CurvePoint, EvalMasks, GridPoint, PathPoint, RunOutput, RunResult, SeedCurve,
    SeedResult,
};
pub use report::{
    curve_csv, load_model, load_run, read_results, render, table_csv, write_curve, write_run, LoadedRun, Results,
};
