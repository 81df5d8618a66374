//! Experiment configuration, multi-seed execution, CSV/JSON artifacts,
//! aggregation and oracle reporting.

pub mod config;
pub mod oracle;
pub mod run;
pub mod summary;

pub use config::{Algorithm, EnvName, Experiment, ExperimentFile, ExperimentSpec};
pub use oracle::{oracle_report, OracleReport};
pub use run::{run_experiment, run_file, run_single, CsvRow, RunResult, CSV_COLUMNS};
pub use summary::{summarize, Summary, SummaryRow};
