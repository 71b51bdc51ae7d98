//! Experiment driver: baseline and SBR runs, sweeps and report files.

mod baseline;
mod config;
mod report;
mod run;
mod sweep;

pub use baseline::{bmpki, cdf_points, fetch_pass, run_baseline, BaselineReport, FetchOutcome, PcBaseline};
pub use config::{ExperimentConfig, Pc, SbrParams, SweepSpec, YtivMode};
pub use report::{
    bias_scatter, emit_baseline, emit_report, emit_sweep, scatter_diagonal_gap, summary_json, validate_summary,
    write_scatter, ScatterPoint,
};
pub use run::{run_sbr, run_sbr_with_pass, ExperimentReport, PcReport, TivStats};
pub use sweep::{config_seed, enumerate_configs, run_sweep, select_best_per_pc, ytiv_thresholds, BestChoice, BestPerPc};
