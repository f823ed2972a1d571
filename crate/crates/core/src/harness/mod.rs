//! Experiment orchestration: hyperparameter validation, Monte-Carlo and
//! cross-validated studies, method rankings and report files.

mod config;
mod cv;
mod ranking;
mod report;
mod runner;
mod validation;

pub use config::{
    CvScheme, ExperimentConfig, HyperGrids, MethodConfig, ModelRef, DEFAULT_HOLDOUT_SIZE,
    DEFAULT_K_GRID, DEFAULT_MAX_DIM, DEFAULT_MAX_PLS_COMPONENTS,
};
pub use cv::{cross_validate, stratified_folds, CvOutcome, FoldOutcome};
pub use ranking::{rank_methods, row_points, RankingCriterion, RankingTable, F1_POINTS};
pub use report::{
    emit_report, manifest, parse_raw_csv, ranking_csv, raw_csv, summary_csv, WideRow, WideTable,
    MISSING,
};
pub use runner::{
    aggregate, replication_stream, run_experiment, AggregateRow, ExperimentReport, Purpose, RawRow,
    STREAMS_PER_REPLICATION,
};
pub use validation::{validate_hyperparams, Choice, TrainedPipeline, Validated};
