//! Experiment drivers: dimension sweeps and source-to-target transfer runs,
//! with reports written cell by cell so that aborted runs keep their results.
//!
//! A run directory holds `config.json` (the effective config), `cells.jsonl`
//! (one record per finished cell), `models/` (a checkpoint per trained
//! model), and `report.json` / `report.txt` once the run completes.

mod config;
mod report;
mod run;

pub use config::ExperimentConfig;
pub use report::{load_cells, ExperimentReport, LossCurve, PcaPairDiff, ReportCell};
pub use run::{evaluate_map, pca_pair_diffs, run_dimension_sweep, run_transfer_experiment};
