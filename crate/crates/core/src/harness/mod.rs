//! Experiment orchestration: configuration, ground truth, trial batches,
//! CSV output and scaling fits.

mod config;
mod experiment;
mod fit;
mod output;
mod positions;

pub use config::{parse_key_values, parse_n_grid, ConfigError, ExperimentConfig, PositionSource, ProtocolKind, LABEL_RANGE};
pub use experiment::{
    run_experiment, run_one, time_bound, trial_ground_truth, ExperimentError, ResultRow, ORACLE_TOL,
};
pub use fit::{
    fit_scaling, least_squares, quantile, summarise, target_exponent, FitError, FitModel, ScalingReport, SizeSummary,
    MIN_CONVERGED, MIN_DISTINCT_N,
};
pub use output::{csv_string, format_extras, report_text, summary_table, write_csv, CSV_HEADER};
pub use positions::{generate_uniform, PositionError, PositionFile, GENERAL_POSITION_LIMIT, POSITION_GRID_BITS};
