//! Simulation and real-data experiment orchestration.

mod calibrate;
mod experiment;
mod generate;
mod ingest;
mod stats;

pub use calibrate::{calibrate_lambda, calibrate_lambda_with, LambdaEstimate, MIN_PIECE_SAMPLES};
pub use experiment::{
    fit_estimator, render_table, run_experiment, run_real_data, EstimatorName, EstimatorRow, ExperimentConfig,
    FitSettings, Grids, RealDataConfig, RealDataRow, ResultTable, RESULT_VERSION,
};
pub use generate::{generate, normalized_error, normalizer, EvalSet, NormalizedError, NORMALIZER_REALIZATIONS};
pub use ingest::{ingest_csv, Ingested, Normalization, BIKE_SHARING_FEATURES};
pub use stats::{derive_seed, iqr, median, quantile_sorted};
