use serde::{Deserialize, Serialize};

use super::builder::{NetBuilder, Signal};
use crate::error::{invalid, Error, Result};
use crate::net::{Activation, DenseNetwork};
use crate::scalar::Scalar;

/// Multiplier on `max R² · ε_mach` in [`fp_slack`].
pub const FP_SLACK_KAPPA: f64 = 8.0;

/// Additive allowance for cancellation in the `R²`-scaled sigmoid
/// differences: `κ · max(R²) · ε_mach · scale`.
pub fn fp_slack(r_values: &[f64], value_scale: f64) -> f64 {
    let r2 = r_values.iter().fold(1.0f64, |m, r| m.max(r * r));
    FP_SLACK_KAPPA * r2 * f64::EPSILON * value_scale
}

/// A constructed network together with the sup-norm error bound it carries
/// on `[-a, a]^d`.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundedApproxNet<T = f64> {
    pub net: DenseNetwork<T>,
    pub a: f64,
    /// The scale used by the identity/multiplication stages. Composite
    /// builders record the largest one here and every value in `r_values`.
    pub r: f64,
    pub r_values: Vec<f64>,
    pub theoretical_bound: f64,
    pub max_weight: f64,
    /// `c` in the guarantee `max |weight| ≤ c · R^p` when tabulated.
    pub weight_constant: Option<f64>,
    pub weight_power: i32,
    /// Smallest `R` for which the bound was proved, when it exceeds the `R`
    /// actually used.
    pub r_required: Option<f64>,
}

impl BoundedApproxNet<f64> {
    pub(crate) fn from_parts(net: DenseNetwork<f64>, a: f64, r_values: Vec<f64>, bound: f64) -> Self {
        let max_weight = net.max_abs_weight();
        let r = r_values.iter().fold(1.0f64, |m, &v| m.max(v));
        Self {
            net,
            a,
            r,
            r_values,
            theoretical_bound: bound,
            max_weight,
            weight_constant: None,
            weight_power: 2,
            r_required: None,
        }
    }

    fn with_weights(mut self, c: f64, power: i32) -> Self {
        self.weight_constant = Some(c);
        self.weight_power = power;
        self
    }

    pub fn eval(&self, x: &[f64]) -> Result<f64> {
        self.net.forward(x)
    }

    /// [`fp_slack`] at this network's scales.
    pub fn fp_slack(&self, value_scale: f64) -> f64 {
        fp_slack(&self.r_values, value_scale)
    }

    /// `max |weight| ≤ c · R^p` for the tabulated constant, if any.
    pub fn weights_within_constant(&self) -> Option<bool> {
        self.weight_constant
            .map(|c| self.max_weight <= c * self.r.powi(self.weight_power) * (1.0 + 1e-12))
    }

    /// Whether the `R` used meets the lemma's lower bound.
    pub fn meets_r_requirement(&self) -> bool {
        self.r_required.is_none_or(|need| self.r >= need)
    }

    pub fn cast<U: Scalar>(&self) -> BoundedApproxNet<U> {
        BoundedApproxNet {
            net: self.net.cast(),
            a: self.a,
            r: self.r,
            r_values: self.r_values.clone(),
            theoretical_bound: self.theoretical_bound,
            max_weight: self.max_weight,
            weight_constant: self.weight_constant,
            weight_power: self.weight_power,
            r_required: self.r_required,
        }
    }
}

/// Analytic constants of the activation that enter the bounds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Constants {
    pub d1_sup: f64,
    pub d2_sup: f64,
    pub d3_sup: f64,
    pub d1_id: f64,
    pub d2_sq: f64,
    pub relu_ratio: f64,
}

impl Constants {
    pub fn of(act: &Activation) -> Self {
        Self {
            d1_sup: act.sup_norm(1).expect("tabulated"),
            d2_sup: act.sup_norm(2).expect("tabulated"),
            d3_sup: act.sup_norm(3).expect("tabulated"),
            d1_id: act.d1_id().abs(),
            d2_sq: act.d2_sq().abs(),
            relu_ratio: act.relu_ratio(),
        }
    }

    pub fn identity_bound(&self, a: f64, r: f64) -> f64 {
        self.d2_sup * a * a / (2.0 * self.d1_id) / r
    }

    pub fn square_bound(&self, a: f64, r: f64) -> f64 {
        5.0 * self.d3_sup * a.powi(3) / (3.0 * self.d2_sq) / r
    }

    pub fn mult_bound(&self, a: f64, r: f64) -> f64 {
        20.0 * self.d3_sup * a.powi(3) / (3.0 * self.d2_sq) / r
    }

    pub fn relu_bound(&self, a: f64, r: f64) -> f64 {
        56.0 * self.relu_ratio * a.powi(3) / r
    }

    pub fn trunc_bound(&self, d: usize, a: f64, b: f64, r: f64) -> f64 {
        448.0 * self.relu_ratio * (d as f64 * a * b).powi(3) / r
    }

    /// `(12M)^{M-1} (an)^{M+2} · 4 · 448 · ratio / R`.
    pub fn bspline_bound(&self, degree: usize, a: f64, n: f64, r: f64) -> f64 {
        let m = degree as f64;
        (12.0 * m).powi(degree as i32 - 1) * (a * n).powi(degree as i32 + 2) * 4.0 * 448.0
            * self.relu_ratio
            / r
    }

    /// Smallest `R` for which the spline bound is proved.
    pub fn bspline_r_required(&self, degree: usize, a: f64, n: f64) -> f64 {
        let an = a * n;
        let id_term = degree as f64 * 9.0 * self.d2_sup * an * an / (2.0 * self.d1_id);
        let second = if degree >= 2 {
            let m1 = (degree - 1) as f64;
            (12.0 * m1).powi(degree as i32 - 2) * an.powi(degree as i32 + 1) * 4.0 * 448.0
                * self.relu_ratio
        } else {
            // degree 1 only needs the ReLU condition on [-2an, 2an]
            self.d2_sup * 2.0 * an / (2.0 * self.d1_id)
        };
        id_term.max(second).max(1.0)
    }
}

/// Weight constants `c` with `max |weight| ≤ c · R^p`, derived from the
/// activation: `p = 1` for the identity net and `p = 2` otherwise.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WeightConstants {
    pub identity: f64,
    pub square: f64,
    pub mult: f64,
    pub relu: f64,
}

impl WeightConstants {
    pub fn of(act: &Activation) -> Self {
        let k = Constants::of(act);
        let t = act.t_id.abs().max(act.t_sq.abs());
        let identity = (1.0 / k.d1_id).max(t).max(1.0);
        let square = (2.0 / k.d2_sq).max(t).max(2.0);
        let mult = (1.0 / (2.0 * k.d2_sq)).max(t).max(2.0);
        let relu = mult.max(t + 2.0 / k.d1_id).max(1.0);
        Self { identity, square, mult, relu }
    }
}

fn check_r_a(r: f64, a: f64) -> Result<()> {
    if !(r >= 1.0) || !r.is_finite() {
        return invalid(format!("R = {r} violates R >= 1"));
    }
    if !(a > 0.0) || !a.is_finite() {
        return invalid(format!("a = {a} violates a > 0"));
    }
    Ok(())
}

/// One-neuron approximation of `x ↦ x` on `[-a, a]`.
pub fn build_identity(r: f64, a: f64) -> Result<BoundedApproxNet> {
    check_r_a(r, a)?;
    let act = Activation::logistic();
    let mut b = NetBuilder::new(act, 1);
    let y = b.identity(&Signal::input(0), r)?;
    let net = b.finish(&y, 0)?;
    let bound = Constants::of(&act).identity_bound(a, r);
    Ok(BoundedApproxNet::from_parts(net, a, vec![r], bound).with_weights(WeightConstants::of(&act).identity, 1))
}

/// Two-neuron approximation of `x ↦ x²` on `[-a, a]`.
pub fn build_square(r: f64, a: f64) -> Result<BoundedApproxNet> {
    check_r_a(r, a)?;
    let act = Activation::logistic();
    let mut b = NetBuilder::new(act, 1);
    let y = b.square(&Signal::input(0), r)?;
    let net = b.finish(&y, 0)?;
    let bound = Constants::of(&act).square_bound(a, r);
    Ok(BoundedApproxNet::from_parts(net, a, vec![r], bound).with_weights(WeightConstants::of(&act).square, 2))
}

/// Four-neuron approximation of `(x, y) ↦ x·y` on `[-a, a]²`.
pub fn build_mult(r: f64, a: f64) -> Result<BoundedApproxNet> {
    check_r_a(r, a)?;
    let act = Activation::logistic();
    let mut b = NetBuilder::new(act, 2);
    let y = b.mult(&Signal::input(0), &Signal::input(1), r)?;
    let net = b.finish(&y, 0)?;
    let bound = Constants::of(&act).mult_bound(a, r);
    Ok(BoundedApproxNet::from_parts(net, a, vec![r], bound).with_weights(WeightConstants::of(&act).mult, 2))
}

fn relu_r_min(k: &Constants, a: f64) -> f64 {
    (k.d2_sup * a / (2.0 * k.d1_id)).max(1.0)
}

/// Two-hidden-layer approximation of `max{x, 0}` on `[-a, a]`.
pub fn build_relu(r: f64, a: f64) -> Result<BoundedApproxNet> {
    check_r_a(r, a)?;
    let act = Activation::logistic();
    let k = Constants::of(&act);
    if a < 1.0 {
        return invalid(format!("a = {a} violates a >= 1"));
    }
    let need = relu_r_min(&k, a);
    if r < need {
        return invalid(format!(
            "R = {r} violates R >= max(||s''|| a / (2 |s'(t_id)|), 1) = {need}"
        ));
    }
    let mut b = NetBuilder::new(act, 1);
    let y = b.relu(&Signal::input(0), r)?;
    let net = b.finish(&y, 0)?;
    Ok(BoundedApproxNet::from_parts(net, a, vec![r], k.relu_bound(a, r)).with_weights(WeightConstants::of(&act).relu, 2))
}

/// Approximation of `max{Σ_k α_k (x_k − γ_k), 0}` on `[-a, a]^d`.
pub fn build_trunc(alpha: &[f64], gamma: &[f64], r: f64, a: f64, b: f64) -> Result<BoundedApproxNet> {
    check_r_a(r, a)?;
    let d = alpha.len();
    if d == 0 {
        return invalid("truncated hinge needs at least one coordinate");
    }
    if gamma.len() != d {
        return Err(Error::DimensionMismatch { expected: d, got: gamma.len() });
    }
    if a < 1.0 || b < 1.0 {
        return invalid(format!("a = {a}, b = {b} violate a, b >= 1"));
    }
    if let Some(g) = gamma.iter().find(|g| g.abs() > a) {
        return invalid(format!("offset {g} violates |gamma_k| <= a = {a}"));
    }
    if let Some(c) = alpha.iter().find(|c| c.abs() > b) {
        return invalid(format!("coefficient {c} violates |alpha_k| <= b = {b}"));
    }
    let act = Activation::logistic();
    let k = Constants::of(&act);
    let need = (k.d2_sup * d as f64 * a * b / k.d1_id).max(1.0);
    if r < need {
        return invalid(format!(
            "R = {r} violates R >= max(||s''|| d a b / |s'(t_id)|, 1) = {need}"
        ));
    }
    let mut nb = NetBuilder::new(act, d);
    let inputs: Vec<Signal> = (0..d).map(Signal::input).collect();
    let parts: Vec<(f64, &Signal)> = alpha.iter().copied().zip(&inputs).collect();
    let shift = -alpha.iter().zip(gamma).map(|(a, g)| a * g).sum::<f64>();
    let z = Signal::combine(&parts, shift)?;
    let y = nb.relu(&z, r)?;
    let net = nb.finish(&y, 0)?;
    let scale = alpha
        .iter()
        .map(|v| v.abs())
        .fold(1.0f64, f64::max)
        .max(shift.abs());
    let c = WeightConstants::of(&act).relu * scale;
    Ok(BoundedApproxNet::from_parts(net, a, vec![r], k.trunc_bound(d, a, b, r)).with_weights(c, 2))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid(a: f64, n: usize) -> impl Iterator<Item = f64> {
        (0..=n).map(move |i| -a + 2.0 * a * i as f64 / n as f64)
    }

    #[test]
    fn slack_formula() {
        assert!((fp_slack(&[1.0], 1.0) - 8.0 * f64::EPSILON).abs() < 1e-30);
        assert!((fp_slack(&[1e4], 1.0) - 1.7763568394002505e-7).abs() < 1e-15);
        assert!((fp_slack(&[10.0, 1e6], 1.0) - 1.7763568394002505e-3).abs() < 1e-12);
    }

    #[test]
    fn identity_is_exact_at_zero() {
        for (r, a) in [(1.0, 1.0), (37.0, 2.0), (1e5, 1.0)] {
            assert_eq!(build_identity(r, a).unwrap().eval(&[0.0]).unwrap(), 0.0);
        }
    }

    #[test]
    fn identity_bound_on_grid() {
        let n = build_identity(1000.0, 1.0).unwrap();
        assert!((n.eval(&[0.7]).unwrap() - 0.7).abs() <= n.theoretical_bound);
        let worst = grid(1.0, 1000).map(|x| (n.eval(&[x]).unwrap() - x).abs()).fold(0.0, f64::max);
        assert!(worst <= n.theoretical_bound + n.fp_slack(1.0));
    }

    #[test]
    fn identity_scales_like_one_over_r() {
        let e = |r| {
            let n = build_identity(r, 1.0).unwrap();
            (n.eval(&[0.9]).unwrap() - 0.9).abs()
        };
        assert!(e(10.0) / e(100.0) >= 5.0);
    }

    #[test]
    fn identity_at_r100() {
        let n = build_identity(100.0, 1.0).unwrap();
        let want = 1.0 / (6.0 * 3f64.sqrt()) / (2.0 * 0.25) / 100.0;
        assert!((n.theoretical_bound - want).abs() < 1e-15);
        assert!((n.eval(&[0.3]).unwrap() - 0.3).abs() <= 0.00481);
    }

    #[test]
    fn square_exact_at_zero_and_bounded() {
        let n = build_square(1e4, 1.0).unwrap();
        assert_eq!(n.eval(&[0.0]).unwrap(), 0.0);
        let slack = n.fp_slack(1.0);
        for x in grid(1.0, 2000) {
            assert!((n.eval(&[x]).unwrap() - x * x).abs() <= n.theoretical_bound + slack);
            let sym = (n.eval(&[x]).unwrap() - n.eval(&[-x]).unwrap()).abs();
            assert!(sym <= 2.0 * n.theoretical_bound);
        }
    }

    #[test]
    fn mult_zero_and_symmetry() {
        let n = build_mult(1e4, 1.0).unwrap();
        for x in [-1.0, -0.3, 0.0, 0.45, 1.0] {
            assert_eq!(n.eval(&[x, 0.0]).unwrap(), 0.0);
        }
        let v = n.eval(&[0.5, -0.8]).unwrap();
        assert!((v + 0.4).abs() <= n.theoretical_bound + n.fp_slack(1.0));
        let sym = (n.eval(&[0.5, -0.8]).unwrap() - n.eval(&[-0.8, 0.5]).unwrap()).abs();
        assert!(sym <= 2.0 * n.theoretical_bound);
    }

    #[test]
    fn relu_endpoints_and_trend() {
        let n = build_relu(1e4, 1.0).unwrap();
        let b = n.theoretical_bound;
        assert!(n.eval(&[-1.0]).unwrap().abs() <= b);
        assert!((n.eval(&[1.0]).unwrap() - 1.0).abs() <= b);
        let vals: Vec<f64> = grid(1.0, 1000).map(|x| n.eval(&[x]).unwrap()).collect();
        assert!(vals.windows(2).all(|w| w[1] >= w[0] - 2.0 * b));
        assert_eq!((n.net.hidden_layers(), n.net.width()), (2, 4));
    }

    #[test]
    fn relu_precondition_is_named() {
        let err = build_relu(1e4, 0.5).unwrap_err().to_string();
        assert!(err.contains("a >= 1"), "{err}");
        let err = build_relu(1.0, 100.0).unwrap_err().to_string();
        assert!(err.contains("R >= max"), "{err}");
        assert!(build_identity(0.5, 1.0).is_err());
    }

    #[test]
    fn trunc_cases() {
        let z = build_trunc(&[0.0, 0.0], &[0.3, -0.2], 1e4, 1.0, 1.0).unwrap();
        assert!(z.eval(&[0.9, -0.9]).unwrap().abs() <= z.theoretical_bound);

        let t = build_trunc(&[1.0], &[0.0], 1e4, 1.0, 1.0).unwrap();
        let r = build_relu(1e4, 1.0).unwrap();
        for x in grid(1.0, 200) {
            let gap = (t.eval(&[x]).unwrap() - r.eval(&[x]).unwrap()).abs();
            assert!(gap <= 2.0 * t.theoretical_bound);
        }

        let t2 = build_trunc(&[1.0, -1.0], &[0.0, 0.0], 1e5, 1.0, 1.0).unwrap();
        let v = t2.eval(&[0.6, 0.1]).unwrap();
        assert!((v - 0.5).abs() <= t2.theoretical_bound + t2.fp_slack(1.0));

        assert!(build_trunc(&[2.0], &[0.0], 1e4, 1.0, 1.0).is_err());
        assert!(build_trunc(&[1.0], &[1.5], 1e4, 1.0, 1.0).is_err());
        assert!(build_trunc(&[1.0], &[0.0, 0.0], 1e4, 1.0, 1.0).is_err());
    }

    #[test]
    fn weights_respect_table() {
        for n in [
            build_identity(100.0, 1.0).unwrap(),
            build_square(100.0, 1.0).unwrap(),
            build_mult(100.0, 1.0).unwrap(),
            build_relu(100.0, 1.0).unwrap(),
            build_trunc(&[0.5, -1.0], &[0.2, 0.7], 100.0, 1.0, 1.0).unwrap(),
        ] {
            assert_eq!(n.weights_within_constant(), Some(true), "{n:?}");
        }
    }

    #[test]
    fn class_shapes() {
        let shape = |n: &BoundedApproxNet| (n.net.hidden_layers(), n.net.width());
        assert_eq!(shape(&build_identity(10.0, 1.0).unwrap()), (1, 1));
        assert_eq!(shape(&build_square(10.0, 1.0).unwrap()), (1, 2));
        assert_eq!(shape(&build_mult(10.0, 1.0).unwrap()), (1, 4));
        assert_eq!(shape(&build_trunc(&[1.0, 1.0], &[0.0, 0.0], 10.0, 1.0, 1.0).unwrap()), (2, 4));
    }
}
