//! Experiment runner behind the `splitsde` binary: configuration, ensemble
//! integration against a reference, reports and plot data.

mod config;
mod plot;
mod report;
mod run;

pub use config::{ExperimentConfig, OutputFormat, ProblemPreset, Reference, Scheme, COULOMB_REFERENCE_DT};
pub use plot::emit_plot_data;
pub use report::{
    emit_report, fmt_f64, parse_csv, parse_json, parse_report, render_report, write_csv, write_json, write_samples,
    REPORT_COLUMNS,
};
pub use run::{fine_path, per_step_seconds, run_experiment, ExperimentResult, PathFailure, TrajectoryDump};
