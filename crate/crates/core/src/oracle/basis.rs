use serde::{Deserialize, Serialize};

use super::knots::{bspline_eval, KnotSequence};
use crate::error::{invalid, Error, Result};
use crate::scalar::Scalar;

/// `B_{index,degree}(x^{(coord)})` over its own knot sequence.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound(
    serialize = "T: Serialize",
    deserialize = "T: Scalar + Deserialize<'de>"
))]
pub struct SplineFactor<T> {
    pub coord: usize,
    pub index: isize,
    pub degree: usize,
    pub knots: KnotSequence<T>,
}

/// `(Σ_k α_k (x^{(coords_k)} − γ_k))₊`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HingeFactor<T> {
    pub coords: Vec<usize>,
    pub alpha: Vec<T>,
    pub gamma: Vec<T>,
}

impl<T: Scalar> HingeFactor<T> {
    pub fn new(coords: Vec<usize>, alpha: Vec<T>, gamma: Vec<T>) -> Result<Self> {
        if coords.len() != alpha.len() || coords.len() != gamma.len() {
            return invalid("hinge coords, alpha and gamma must have equal length");
        }
        if coords.is_empty() {
            return invalid("hinge factor needs at least one coordinate");
        }
        Ok(Self { coords, alpha, gamma })
    }

    /// Hinge over all `d` coordinates.
    pub fn dense(alpha: Vec<T>, gamma: Vec<T>) -> Result<Self> {
        Self::new((0..alpha.len()).collect(), alpha, gamma)
    }

    /// The affine form before truncation.
    pub fn affine(&self, x: &[T]) -> T {
        self.coords
            .iter()
            .zip(&self.alpha)
            .zip(&self.gamma)
            .map(|((&c, &a), &g)| a * (x[c] - g))
            .sum()
    }

    pub fn eval(&self, x: &[T]) -> T {
        self.affine(x).max(T::zero())
    }

    /// Expands to length-`d` coefficient and offset vectors (zeros elsewhere).
    /// Repeated coordinates are merged, which requires equal offsets.
    pub fn to_dense(&self, d: usize) -> Result<(Vec<T>, Vec<T>)> {
        let mut alpha = vec![T::zero(); d];
        let mut gamma = vec![T::zero(); d];
        let mut seen = vec![false; d];
        for ((&c, &a), &g) in self.coords.iter().zip(&self.alpha).zip(&self.gamma) {
            if c >= d {
                return Err(Error::DimensionMismatch { expected: d, got: c + 1 });
            }
            if seen[c] && gamma[c] != g {
                return invalid(format!("coordinate {c} repeated with different offsets"));
            }
            seen[c] = true;
            alpha[c] = alpha[c] + a;
            gamma[c] = g;
        }
        Ok((alpha, gamma))
    }
}

/// Product of univariate B-spline factors and linear hinge factors. The empty
/// product is 1.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(bound(
    serialize = "T: Serialize",
    deserialize = "T: Scalar + Deserialize<'de>"
))]
pub struct GeneralizedBasisFunction<T> {
    pub splines: Vec<SplineFactor<T>>,
    pub hinges: Vec<HingeFactor<T>>,
}

impl<T: Scalar> GeneralizedBasisFunction<T> {
    pub fn new(splines: Vec<SplineFactor<T>>, hinges: Vec<HingeFactor<T>>) -> Result<Self> {
        for s in &splines {
            if !s.knots.spline_indices(s.degree).contains(&s.index) {
                return invalid(format!(
                    "spline index {} invalid for degree {} on {} knots",
                    s.index,
                    s.degree,
                    s.knots.values().len()
                ));
            }
        }
        Ok(Self { splines, hinges })
    }

    /// Smallest input dimension this function can be evaluated on.
    pub fn min_dim(&self) -> usize {
        let s = self.splines.iter().map(|s| s.coord + 1);
        let h = self.hinges.iter().flat_map(|h| h.coords.iter().map(|c| c + 1));
        s.chain(h).max().unwrap_or(0)
    }

    pub fn eval(&self, x: &[T]) -> Result<T> {
        let need = self.min_dim();
        if x.len() < need {
            return Err(Error::DimensionMismatch { expected: need, got: x.len() });
        }
        let mut acc = T::one();
        for s in &self.splines {
            acc = acc * bspline_eval(&s.knots, s.index, s.degree, x[s.coord])?;
        }
        for h in &self.hinges {
            acc = acc * h.eval(x);
        }
        Ok(acc)
    }

    /// Largest absolute value among knots, hinge coefficients and offsets.
    pub fn parameter_magnitude(&self) -> T {
        let knots = self.splines.iter().flat_map(|s| s.knots.values().iter().copied());
        let hinge = self.hinges.iter().flat_map(|h| h.alpha.iter().chain(&h.gamma).copied());
        knots.chain(hinge).fold(T::zero(), |m, v| m.max(v.abs()))
    }

    /// Checks `|parameters| ≤ c1·n^c2`.
    pub fn check_parameter_bound(&self, c1: f64, c2: f64, n: usize) -> Result<()> {
        let limit = c1 * (n as f64).powf(c2);
        let got = self.parameter_magnitude().as_f64();
        if got > limit {
            return Err(Error::Precondition(format!(
                "basis parameter magnitude {got} exceeds {limit}"
            )));
        }
        Ok(())
    }
}

/// Evaluates `b` at `x`.
pub fn basis_eval<T: Scalar>(b: &GeneralizedBasisFunction<T>, x: &[T]) -> Result<T> {
    b.eval(x)
}
