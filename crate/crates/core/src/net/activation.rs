//! Squashing activations and the analytic quantities the approximation
//! builders need (derivatives, sup-norms of derivatives, expansion points).

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ActivationKind {
    Logistic,
}

/// A squashing activation together with the expansion points used by the
/// identity, squaring and multiplication networks.
///
/// `t_id` is the point where the first derivative is used (identity net);
/// `t_sq` is the point where the second derivative is used (square and
/// multiplication nets, and the ReLU net's inner product stage).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Activation {
    pub kind: ActivationKind,
    pub t_id: f64,
    pub t_sq: f64,
}

const NONZERO_TOL: f64 = 1e-12;

impl Default for Activation {
    fn default() -> Self {
        Self::logistic()
    }
}

impl Activation {
    /// Logistic squasher with `t_id = 0` (where `σ'` is maximal) and `t_sq = 1`.
    pub fn logistic() -> Self {
        Self { kind: ActivationKind::Logistic, t_id: 0.0, t_sq: 1.0 }
    }

    /// Builds an activation with custom expansion points; rejects points where
    /// `σ'(t_id)` or `σ''(t_sq)` vanish.
    pub fn with_points(kind: ActivationKind, t_id: f64, t_sq: f64) -> Result<Self> {
        let a = Self { kind, t_id, t_sq };
        if a.derivative(t_id, 1)?.abs() <= NONZERO_TOL {
            return invalid(format!("first derivative vanishes at t_id = {t_id}"));
        }
        if a.derivative(t_sq, 2)?.abs() <= NONZERO_TOL {
            return invalid(format!("second derivative vanishes at t_sq = {t_sq}"));
        }
        Ok(a)
    }

    #[inline]
    pub fn eval<T: Scalar>(&self, x: T) -> T {
        match self.kind {
            ActivationKind::Logistic => logistic(x),
        }
    }

    /// `σ^(order)(x)` for `order ∈ {0, 1, 2, 3}`, in closed form.
    pub fn derivative<T: Scalar>(&self, x: T, order: usize) -> Result<T> {
        let s = self.eval(x);
        let one = T::one();
        let two = T::lit(2.0);
        let six = T::lit(6.0);
        match (self.kind, order) {
            (ActivationKind::Logistic, 0) => Ok(s),
            (ActivationKind::Logistic, 1) => Ok(s * (one - s)),
            (ActivationKind::Logistic, 2) => Ok(s * (one - s) * (one - two * s)),
            (ActivationKind::Logistic, 3) => Ok(s * (one - s) * (one - six * s + six * s * s)),
            _ => invalid(format!("derivative order {order} not supported (0..=3)")),
        }
    }

    /// `‖σ^(order)‖_∞` over the real line.
    pub fn sup_norm(&self, order: usize) -> Result<f64> {
        match (self.kind, order) {
            (ActivationKind::Logistic, 0) => Ok(1.0),
            (ActivationKind::Logistic, 1) => Ok(0.25),
            (ActivationKind::Logistic, 2) => Ok(1.0 / (6.0 * 3f64.sqrt())),
            (ActivationKind::Logistic, 3) => Ok(0.125),
            _ => invalid(format!("sup-norm of derivative order {order} not tabulated")),
        }
    }

    /// `σ'(t_id)`.
    pub fn d1_id(&self) -> f64 {
        self.derivative(self.t_id, 1).expect("order 1 supported")
    }

    /// `σ''(t_sq)`.
    pub fn d2_sq(&self) -> f64 {
        self.derivative(self.t_sq, 2).expect("order 2 supported")
    }

    /// Ratio `max{‖σ''‖, ‖σ'''‖, 1} / min{2|σ'(t_id)|, |σ''(t_sq)|, 1}` that
    /// appears in the ReLU, truncation and spline bounds.
    pub fn relu_ratio(&self) -> f64 {
        let num = self
            .sup_norm(2)
            .unwrap()
            .max(self.sup_norm(3).unwrap())
            .max(1.0);
        let den = (2.0 * self.d1_id().abs()).min(self.d2_sq().abs()).min(1.0);
        num / den
    }

    /// N-admissibility check: derivatives `1..=n` nonzero at `probe` and the
    /// tail condition `|σ(y) - 1| <= 1/y` (y > 0), `|σ(y)| <= 1/|y|` (y < 0)
    /// on the grid `±{1, 10, ..., 10^6}`.
    pub fn check_admissible(&self, n: usize, probe: f64) -> bool {
        if n > 2 {
            return false;
        }
        for k in 1..=n {
            match self.derivative(probe, k) {
                Ok(v) if v.abs() > NONZERO_TOL => {}
                _ => return false,
            }
        }
        (0..=6).all(|e| {
            let y = 10f64.powi(e);
            (self.eval(y) - 1.0).abs() <= 1.0 / y && self.eval(-y).abs() <= 1.0 / y
        })
    }
}

#[inline]
fn logistic<T: Scalar>(x: T) -> T {
    if x >= T::zero() {
        T::one() / (T::one() + (-x).exp())
    } else {
        let e = x.exp();
        e / (T::one() + e)
    }
}
