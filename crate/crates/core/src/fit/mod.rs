//! Least-squares fitting of dense and sparse networks, truncation and
//! split-sample model selection.

mod data;
mod risk;
mod select;
mod train;

pub use data::Dataset;
pub use risk::{empirical_risk, gradient, truncate_predict, truncated_risk, Trainable};
pub use select::{default_candidates, select_model, CandidateScore, Selection};
pub use train::{train, FitConfig, FitReport, ALPHA_C1, ALPHA_C2, BETA_C3, DENSE_BFGS_MAX_PARAMS};
