use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{argmin, Predictor};
use crate::error::{invalid, Error, Result};
use crate::fit::Dataset;

pub const RBF_RADII: [f64; 7] = [0.1, 0.5, 1.0, 5.0, 30.0, 60.0, 100.0];
pub const RBF_RIDGE: f64 = 1e-10;

/// Wendland kernel `(1 − r)⁶₊ (35r² + 18r + 3)`.
pub fn wendland(r: f64) -> f64 {
    if r >= 1.0 {
        return 0.0;
    }
    (1.0 - r).powi(6) * (35.0 * r * r + 18.0 * r + 3.0)
}

fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(u, v)| (u - v) * (u - v)).sum::<f64>().sqrt()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RbfModel {
    pub radius: f64,
    pub ridge: f64,
    centers: Vec<Vec<f64>>,
    weights: Vec<f64>,
}

impl Predictor for RbfModel {
    fn predict(&self, x: &[f64]) -> f64 {
        self.centers
            .iter()
            .zip(&self.weights)
            .map(|(c, w)| w * wendland(dist(x, c) / self.radius))
            .sum()
    }

    fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(self)?)
    }
}

/// Interpolant through every training point at a fixed radius.
pub fn fit_rbf_radius(data: &Dataset<f64>, radius: f64) -> Result<RbfModel> {
    if !(radius > 0.0) {
        return invalid("radius must be positive");
    }
    let n = data.len();
    let x = data.x();
    let phi = DMatrix::from_fn(n, n, |i, j| {
        wendland(dist(&x[i], &x[j]) / radius) + if i == j { RBF_RIDGE } else { 0.0 }
    });
    let rhs = DVector::from_column_slice(data.y());
    let w = phi
        .cholesky()
        .map(|c| c.solve(&rhs))
        .ok_or_else(|| Error::InvalidArgument(format!("kernel system at radius {radius} is singular")))?;
    if w.iter().any(|v| !v.is_finite()) {
        return invalid(format!("kernel system at radius {radius} is singular"));
    }
    Ok(RbfModel { radius, ridge: RBF_RIDGE, centers: x.to_vec(), weights: w.iter().copied().collect() })
}

/// Chooses the radius by the risk on the testing part of the sample.
pub fn fit_rbf(data: &Dataset<f64>, radii: &[f64], split_fraction: f64) -> Result<RbfModel> {
    if radii.is_empty() {
        return invalid("no candidate radius");
    }
    let (learn, test) = data.split(split_fraction)?;
    let fits: Vec<Option<RbfModel>> = radii
        .par_iter()
        .map(|&r| match fit_rbf_radius(&learn, r) {
            Ok(m) => Some(m),
            Err(e) => {
                log::warn!("skipping radius {r}: {e}");
                None
            }
        })
        .collect();
    let scores: Vec<f64> = fits.iter().map(|m| m.as_ref().map_or(f64::INFINITY, |m| m.risk(&test))).collect();
    let best = argmin(&scores).ok_or_else(|| Error::InvalidArgument("every radius failed".into()))?;
    Ok(fits.into_iter().nth(best).flatten().expect("finite score has a model"))
}
