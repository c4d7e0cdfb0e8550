use super::builder::{NetBuilder, Signal};
use super::primitives::{BoundedApproxNet, Constants};
use crate::error::{invalid, Result};
use crate::net::Activation;
use crate::oracle::KnotSequence;

/// Width of the spline network class for degree `M`:
/// `2^{M-1}·16 + Σ_{k=2}^{M} 2^{M-k+1}`.
pub fn bspline_class_width(degree: usize) -> usize {
    if degree == 0 {
        return 0;
    }
    let tail: usize = (2..=degree).map(|k| 1usize << (degree - k + 1)).sum();
    (1usize << (degree - 1)) * 16 + tail
}

fn check_knots(ks: &KnotSequence<f64>, j: isize, degree: usize, a: f64, n: usize) -> Result<()> {
    if degree < 1 {
        return invalid("spline network needs degree >= 1");
    }
    if n == 0 {
        return invalid("scale n must be positive");
    }
    if !ks.spline_indices(degree).contains(&j) {
        return invalid(format!("spline index {j} out of range for degree {degree}"));
    }
    let gap = 1.0 / n as f64;
    if ks.min_gap() < gap * (1.0 - 1e-12) {
        return invalid(format!(
            "knot gap {} violates t_(k+1) - t_k >= 1/n = {gap}",
            ks.min_gap()
        ));
    }
    if let Some(t) = ks.values().iter().find(|t| t.abs() > a * (1.0 + 1e-12)) {
        return invalid(format!("knot {t} lies outside [-a, a] with a = {a}"));
    }
    Ok(())
}

/// Wires `f_{B_{j,l}}` reading the scalar signal `x` (on the input layer).
/// The result lives on layer `l + 1`.
pub(crate) fn bspline_signal(
    b: &mut NetBuilder,
    x: &Signal,
    ks: &KnotSequence<f64>,
    j: isize,
    l: usize,
    r: f64,
) -> Result<Signal> {
    let t = |k: isize| ks.t(k);
    if l == 1 {
        let (t0, t1, t2) = (t(j), t(j + 1), t(j + 2));
        let h1 = t1 - t0;
        let h2 = t2 - t1;
        let arg = |knot: f64, width: f64| x.affine(1.0 / width, -knot / width);
        let r1 = b.relu(&arg(t0, h1), r)?;
        let r2 = b.relu(&arg(t1, h1), r)?;
        let r3 = b.relu(&arg(t1, h2), r)?;
        let r4 = b.relu(&arg(t2, h2), r)?;
        return Signal::combine(&[(1.0, &r1), (-1.0, &r2), (-1.0, &r3), (1.0, &r4)], 0.0);
    }
    let m = l as isize;
    let left_w = t(j + m) - t(j);
    let right_w = t(j + m + 1) - t(j + 1);
    let left_in = x.affine(1.0 / left_w, -t(j) / left_w);
    let right_in = x.affine(-1.0 / right_w, t(j + m + 1) / right_w);
    let left_id = b.identity_n(&left_in, r, l)?;
    let left_b = bspline_signal(b, x, ks, j, l - 1, r)?;
    let right_id = b.identity_n(&right_in, r, l)?;
    let right_b = bspline_signal(b, x, ks, j + 1, l - 1, r)?;
    let p = b.mult(&left_id, &left_b, r)?;
    let q = b.mult(&right_id, &right_b, r)?;
    Signal::combine(&[(1.0, &p), (1.0, &q)], 0.0)
}

/// Network approximating `B_{j,M}` on `[-a, a]` for knots with gaps at least
/// `1/n`. The network reads coordinate `coord` of a `dim`-dimensional input.
pub fn build_bspline_net_on(
    coord: usize,
    dim: usize,
    j: isize,
    degree: usize,
    ks: &KnotSequence<f64>,
    r: f64,
    a: f64,
    n: usize,
) -> Result<BoundedApproxNet> {
    if coord >= dim {
        return invalid(format!("coordinate {coord} outside input dimension {dim}"));
    }
    if !(r >= 1.0) || !(a >= 1.0) {
        return invalid(format!("R = {r}, a = {a} violate R >= 1, a >= 1"));
    }
    check_knots(ks, j, degree, a, n)?;
    let act = Activation::logistic();
    let k = Constants::of(&act);
    let mut b = NetBuilder::new(act, dim);
    let y = bspline_signal(&mut b, &Signal::input(coord), ks, j, degree, r)?;
    let net = b.finish(&y, 0)?;
    let bound = k.bspline_bound(degree, a, n as f64, r);
    let need = k.bspline_r_required(degree, a, n as f64);
    let mut out = BoundedApproxNet::from_parts(net, a, vec![r], bound);
    if need > r {
        log::warn!("R = {r} is below the proved requirement {need}; the bound is nominal");
        out.r_required = Some(need);
    }
    Ok(out)
}

/// Univariate network approximating `B_{j,M}` on `[-a, a]`.
pub fn build_bspline_net(
    j: isize,
    degree: usize,
    ks: &KnotSequence<f64>,
    r: f64,
    a: f64,
    n: usize,
) -> Result<BoundedApproxNet> {
    build_bspline_net_on(0, 1, j, degree, ks, r, a, n)
}
