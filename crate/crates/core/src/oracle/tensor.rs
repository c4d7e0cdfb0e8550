use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::knots::{bspline_eval, KnotSequence};
use crate::error::{invalid, Error, Result};

/// Tensor-product B-spline fit on `[-A, A]^dim` with `K` uniform intervals
/// per axis. Knots extend `M` intervals past each end so that every spline
/// touching the box is present.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TensorSplineFit {
    pub half_width: f64,
    pub degree: usize,
    pub intervals: usize,
    pub dim: usize,
    pub knots: KnotSequence<f64>,
    /// Coefficients in row-major order over the multi-index `(j_1, …, j_dim)`,
    /// each `j_v` running over `-M..K`.
    pub coeffs: Vec<f64>,
}

impl TensorSplineFit {
    pub fn splines_per_axis(&self) -> usize {
        self.intervals + self.degree
    }

    /// Value of spline number `i` (0-based) along one axis.
    fn axis_values(&self, x: f64) -> Vec<f64> {
        let m = self.degree as isize;
        (0..self.splines_per_axis())
            .map(|i| bspline_eval(&self.knots, i as isize - m, self.degree, x).unwrap_or(0.0))
            .collect()
    }

    fn design_row(&self, x: &[f64]) -> Vec<f64> {
        let per_axis: Vec<Vec<f64>> = x.iter().map(|&v| self.axis_values(v)).collect();
        let s = self.splines_per_axis();
        let total = s.pow(self.dim as u32);
        (0..total)
            .map(|mut idx| {
                let mut p = 1.0;
                for v in (0..self.dim).rev() {
                    p *= per_axis[v][idx % s];
                    idx /= s;
                }
                p
            })
            .collect()
    }

    pub fn eval(&self, x: &[f64]) -> Result<f64> {
        if x.len() != self.dim {
            return Err(Error::DimensionMismatch { expected: self.dim, got: x.len() });
        }
        Ok(self.design_row(x).iter().zip(&self.coeffs).map(|(a, b)| a * b).sum())
    }
}

/// Least-squares tensor spline approximation of `f` on a dense uniform grid.
pub fn tensor_bspline_approx(
    f: impl Fn(&[f64]) -> f64,
    half_width: f64,
    dim: usize,
    degree: usize,
    intervals: usize,
) -> Result<TensorSplineFit> {
    if degree < 1 || intervals < 1 || dim < 1 {
        return invalid("degree, interval count and dimension must be at least 1");
    }
    if !(half_width > 0.0) {
        return invalid("half width must be positive");
    }
    let h = 2.0 * half_width / intervals as f64;
    let count = intervals + 2 * degree + 1;
    let knots = KnotSequence::uniform(-half_width - degree as f64 * h, h, count, degree)?;
    let mut fit = TensorSplineFit {
        half_width,
        degree,
        intervals,
        dim,
        knots,
        coeffs: vec![],
    };
    let s = fit.splines_per_axis();
    let unknowns = s.pow(dim as u32);
    if unknowns > 20_000 {
        return invalid(format!("{unknowns} tensor coefficients is too many"));
    }
    // points per axis: several per interval, at least enough for the system
    let mut g = 6 * intervals + 1;
    while g.pow(dim as u32) < 2 * unknowns {
        g += intervals;
    }
    let axis: Vec<f64> = (0..g)
        .map(|i| -half_width + 2.0 * half_width * i as f64 / (g - 1) as f64)
        .collect();
    let rows = g.pow(dim as u32);
    let mut a = DMatrix::<f64>::zeros(rows, unknowns);
    let mut b = DVector::<f64>::zeros(rows);
    let mut x = vec![0.0; dim];
    for r in 0..rows {
        let mut idx = r;
        for v in (0..dim).rev() {
            x[v] = axis[idx % g];
            idx /= g;
        }
        for (c, val) in fit.design_row(&x).into_iter().enumerate() {
            a[(r, c)] = val;
        }
        b[r] = f(&x);
    }
    let coeffs = a
        .svd(true, true)
        .solve(&b, 1e-12)
        .map_err(|e| Error::Precondition(format!("least squares failed: {e}")))?;
    fit.coeffs = coeffs.iter().copied().collect();
    Ok(fit)
}
