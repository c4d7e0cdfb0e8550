//! Competing estimators behind one prediction surface.

mod knn;
mod mars;
mod neural;
mod rbf;

pub use knn::{fit_knn, knn_candidates, KnnModel};
pub use mars::{fit_mars, MarsConfig, MarsModel, MarsTerm};
pub use neural::{fit_fcnn, fit_neural_sc, FcnnModel, MeanModel, SparseNetModel, FCNN_L_GRID};
pub use rbf::{fit_rbf, fit_rbf_radius, wendland, RbfModel, RBF_RADII, RBF_RIDGE};

use crate::error::Result;
use crate::fit::Dataset;

/// A fitted regression estimate.
pub trait Predictor: Send + Sync {
    fn predict(&self, x: &[f64]) -> f64;

    fn to_json(&self) -> Result<String>;

    fn risk(&self, data: &Dataset<f64>) -> f64 {
        data.rows().map(|(x, y)| (y - self.predict(x)).powi(2)).sum::<f64>() / data.len() as f64
    }
}

/// Index of the smallest score; ties go to the earliest entry.
pub(crate) fn argmin(scores: &[f64]) -> Option<usize> {
    scores
        .iter()
        .enumerate()
        .filter(|(_, s)| s.is_finite())
        .min_by(|(i, a), (j, b)| a.total_cmp(b).then(i.cmp(j)))
        .map(|(i, _)| i)
}
