//! Reproducible end-to-end runs driven by a JSON config.

mod config;
mod manifest;
mod run;

pub use config::{AnalysisSettings, DatasetConfig, RunConfig, Scale, Seeds, TrainingSettings};
pub use manifest::{config_hash, hash_tree, sha256_file, sha256_hex, Manifest, Mismatch, MANIFEST_FILE};
pub use run::{
    analyze, format_table, median, run_experiment, transfer_summary, ClusterAnalysis, EvaluationCell,
    ExperimentReport, PhenomenaSummary, TableRow, TransferSummary, SPAN_MIN_SHARE,
};
