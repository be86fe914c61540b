//! Experiment orchestration: plant simulation, both estimators, metrics and export.

pub mod config;
mod experiment;
mod export;
mod metrics;
mod reproduce;

pub use config::{
    ExperimentConfig, Method, OnlineTarget, PlantKind, BENCHMARK_ADAPTATION_GAIN,
    BENCHMARK_NOISE_SIGMA,
};
pub use experiment::{run_experiment, ExperimentResult, MethodResult, RunMetadata, WeightLog};
pub use export::{export_csv, export_weights_csv, read_csv, summary_table, CsvTable};
pub use metrics::normalized_rmse;
pub use reproduce::{reproduce_paper_tables, CaseKind, PaperTables, RunRecord, PAPER_SEEDS};
