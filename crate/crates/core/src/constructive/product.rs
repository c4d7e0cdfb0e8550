use super::builder::{pad_width, NetBuilder, Signal};
use super::primitives::{build_trunc, BoundedApproxNet, Constants};
use super::spline_net::build_bspline_net_on;
use crate::error::{invalid, Error, Result};
use crate::net::{Activation, DenseNetwork, SparseAdditiveNetwork};
use crate::oracle::GeneralizedBasisFunction;

/// Default ceiling on every scale `R` a composite builder may use. Larger
/// values lose more to cancellation than they gain in approximation.
pub const DEFAULT_R_CAP: f64 = 1e5;

/// A factor network with its accuracy `eps` and magnitude bound `beta` on
/// `[-2a, 2a]^d`.
#[derive(Debug, Clone, Copy)]
pub struct ProductFactor<'a> {
    pub approx: &'a BoundedApproxNet,
    pub eps: f64,
    pub beta: f64,
}

impl<'a> ProductFactor<'a> {
    /// Uses the factor's own theoretical bound as `eps`.
    pub fn new(approx: &'a BoundedApproxNet, beta: f64) -> Self {
        Self { approx, eps: approx.theoretical_bound, beta }
    }
}

fn product_of(v: impl Iterator<Item = f64>) -> f64 {
    v.fold(1.0, |p, x| p * x)
}

/// Error of the realized product network, following the inductive
/// argument with the identity/multiplication errors at the scales actually
/// used. The working interval starts at the factor magnitudes and is
/// enlarged until every intermediate value fits; `∞` means the argument does not close.
#[allow(clippy::too_many_arguments)]
pub(crate) fn realized_product_error(
    k: &Constants,
    eps: &[f64],
    beta: &[f64],
    depths: &[usize],
    d: usize,
    c: f64,
    a: f64,
    r_id: f64,
    r_mult: f64,
) -> f64 {
    let kk = eps.len();
    let widest = beta.iter().zip(eps).map(|(b, e)| b + e).fold(a, f64::max);
    let mut dom = 2.0 * widest;
    let sqrt_d = (d as f64).sqrt();
    for _ in 0..64 {
        let did = k.identity_bound(dom, r_id);
        let dm = k.mult_bound(dom, r_mult);
        let mut e = eps[0];
        let mut pb = beta[0];
        let mut need = a.max(beta[0] + eps[0]);
        let mut t = depths[0] as f64;
        for i in 1..kk {
            let shift = t * did;
            if shift > a {
                return f64::INFINITY;
            }
            let drift = c * sqrt_d * shift;
            let li = depths[i] as f64;
            let bmag = beta[i] + eps[i] + drift;
            need = need.max(a + shift).max(pb + e + li * did).max(bmag);
            e = dm + (li * did + e) * bmag + pb * (eps[i] + drift);
            pb *= beta[i];
            t += li + 1.0;
        }
        if !e.is_finite() {
            return f64::INFINITY;
        }
        if need <= dom {
            return e;
        }
        dom = 2.0 * need;
    }
    f64::INFINITY
}

/// Network approximating `Π_k f_k` from networks for the factors. Factors
/// are evaluated one after another on identity-propagated copies of the
/// input while the running product is carried along and multiplied in.
pub fn build_product_net(
    factors: &[ProductFactor<'_>],
    lipschitz: f64,
    a: f64,
    n: usize,
    r_cap: f64,
) -> Result<BoundedApproxNet> {
    let Some(first) = factors.first() else {
        return invalid("product needs at least one factor");
    };
    let d = first.approx.net.input_dim();
    if let Some(f) = factors.iter().find(|f| f.approx.net.input_dim() != d) {
        return Err(Error::DimensionMismatch { expected: d, got: f.approx.net.input_dim() });
    }
    if factors.iter().any(|f| !(f.beta >= 1.0) || !(f.eps >= 0.0) || !f.eps.is_finite()) {
        return invalid("factors need 0 <= eps and beta >= 1");
    }
    if !(lipschitz >= 1.0) || !(a >= 1.0) || n == 0 || !(r_cap >= 1.0) {
        return invalid("product needs C >= 1, a >= 1, n >= 1 and R cap >= 1");
    }
    let act = Activation::logistic();
    let k = Constants::of(&act);
    let kk = factors.len();
    let r = factors.iter().map(|f| f.approx.net.width()).max().unwrap_or(1);
    let nets: Vec<DenseNetwork<f64>> = factors
        .iter()
        .map(|f| pad_width(&f.approx.net, r))
        .collect::<Result<_>>()?;
    let depths: Vec<usize> = nets.iter().map(DenseNetwork::hidden_layers).collect();
    let total_depth = kk - 1 + depths.iter().sum::<usize>();
    let eps: Vec<f64> = factors.iter().map(|f| f.eps).collect();
    let beta: Vec<f64> = factors.iter().map(|f| f.beta).collect();
    let pb = product_of(beta.iter().copied());
    let spread = kk as f64 * 2f64.powi(kk as i32) * pb;
    let big = a.max(spread);
    let common =
        4.0 * d as f64 * lipschitz * total_depth as f64 * (n as f64).powi(3) * spread;
    let r_id_full = 2.0 * k.d2_sup * big * big / k.d1_id * common;
    let r_mult_full = 160.0 * k.d3_sup * big.powi(3) / (3.0 * k.d2_sq) * common;
    let r_id = r_id_full.min(r_cap).max(1.0);
    let r_mult = r_mult_full.min(r_cap).max(1.0);

    let mut b = NetBuilder::new(act, d);
    let mut x_chain: Vec<Vec<Signal>> = vec![(0..d).map(Signal::input).collect()];
    let mut g = b.embed(&nets[0], &x_chain[0])?;
    let mut t = depths[0];
    for i in 1..kk {
        while x_chain.len() <= t {
            let last = x_chain.last().expect("non-empty").clone();
            let next = last.iter().map(|s| b.identity(s, r_id)).collect::<Result<Vec<_>>>()?;
            x_chain.push(next);
        }
        let f = b.embed(&nets[i], &x_chain[t])?;
        let carried = b.identity_n(&g, r_id, depths[i])?;
        g = b.mult(&carried, &f, r_mult)?;
        t += depths[i] + 1;
    }
    debug_assert!(b.natural_width() <= r + d + 5);
    let net = b.finish(&g, r + d + 5)?;
    debug_assert_eq!(net.hidden_layers(), total_depth);

    let max_eps = eps.iter().copied().fold(0.0, f64::max);
    let nominal = (spread * max_eps).max(1.0 / (n as f64).powi(3));
    let realized = if kk == 1 {
        eps[0]
    } else {
        realized_product_error(&k, &eps, &beta, &depths, d, lipschitz, a, r_id, r_mult)
    };
    let mut r_values: Vec<f64> = factors.iter().flat_map(|f| f.approx.r_values.clone()).collect();
    if kk > 1 {
        r_values.extend([r_id, r_mult]);
    }
    // the nominal form needs the prescribed scales; below them only the
    // realized recursion is proved
    let capped = r_id < r_id_full || r_mult < r_mult_full;
    let floor = if capped { 1.0 / (n as f64).powi(3) } else { nominal };
    let mut out = BoundedApproxNet::from_parts(net, a, r_values, floor.max(realized));
    let need = factors
        .iter()
        .filter_map(|f| f.approx.r_required)
        .chain((kk > 1).then_some(r_id_full.max(r_mult_full)))
        .fold(0.0f64, f64::max);
    if need > out.r {
        out.r_required = Some(need);
    }
    Ok(out)
}

/// Network approximating one generalized basis function on `[-a, a]^d`.
/// Scales follow the prescribed choices, capped at `r_cap`.
pub fn build_basis_net(
    basis: &GeneralizedBasisFunction<f64>,
    d: usize,
    n: usize,
    a: f64,
    r_cap: f64,
) -> Result<BoundedApproxNet> {
    if basis.min_dim() > d {
        return Err(Error::DimensionMismatch { expected: basis.min_dim(), got: d });
    }
    let j = basis.splines.len();
    let k1 = basis.hinges.len();
    if j + k1 == 0 {
        return invalid("basis function has no factors");
    }
    if !(a >= 1.0) || n == 0 {
        return invalid("basis network needs a >= 1 and n >= 1");
    }
    let act = Activation::logistic();
    let k = Constants::of(&act);
    let dense: Vec<(Vec<f64>, Vec<f64>)> =
        basis.hinges.iter().map(|h| h.to_dense(d)).collect::<Result<_>>()?;
    let amax_raw = dense
        .iter()
        .flat_map(|(al, _)| al.iter().map(|v| v.abs()))
        .fold(0.0f64, f64::max);
    let amax = amax_raw.max(1.0);
    let nf = n as f64;
    let kt = (j + k1) as f64;
    let common = kt * 2f64.powi((j + k1) as i32) * (3.0 * d as f64 * amax * a).powi(k1 as i32) * nf.powi(3);
    let mut parts: Vec<(BoundedApproxNet, f64)> = Vec::with_capacity(j + k1);
    let mut full_r = 0.0f64;

    for s in &basis.splines {
        if let Some(t) = s.knots.values().iter().find(|t| t.abs() > a * (1.0 + 1e-12)) {
            return invalid(format!("knot {t} lies outside [-a, a] with a = {a}"));
        }
        let r_b = k.bspline_bound(s.degree, 2.0 * a, nf, 1.0) * common;
        full_r = full_r.max(r_b);
        let r = r_b.min(r_cap).max(1.0);
        let mut net = build_bspline_net_on(s.coord, d, s.index, s.degree, &s.knots, r, 2.0 * a, n)?;
        net.r_required = None;
        parts.push((net, 1.0));
    }
    for (alpha, gamma) in &dense {
        if let Some(g) = gamma.iter().find(|g| g.abs() > a) {
            return invalid(format!("offset {g} violates |gamma| <= a = {a}"));
        }
        let r_t = 448.0 * k.relu_ratio * (d as f64).powi(3) * 8.0 * a.powi(3) * amax.powi(3) * common;
        full_r = full_r.max(r_t);
        let r = r_t.min(r_cap).max(1.0);
        let net = build_trunc(alpha, gamma, r, 2.0 * a, amax)?;
        parts.push((net, 3.0 * d as f64 * amax * a));
    }
    let factors: Vec<ProductFactor<'_>> =
        parts.iter().map(|(net, beta)| ProductFactor::new(net, *beta)).collect();
    let lipschitz = (d as f64 * amax_raw).max(nf).max(1.0);
    let mut out = build_product_net(&factors, lipschitz, a, n, r_cap)?;
    if full_r > out.r {
        out.r_required = Some(out.r_required.unwrap_or(0.0).max(full_r));
    }
    Ok(out)
}

/// A sparse additive network with its error bound on `[-a, a]^d`.
#[derive(Debug, Clone)]
pub struct BoundedSparseNet {
    pub net: SparseAdditiveNetwork<f64>,
    pub a: f64,
    pub theoretical_bound: f64,
    pub r_values: Vec<f64>,
}

impl BoundedSparseNet {
    pub fn fp_slack(&self, value_scale: f64) -> f64 {
        super::primitives::fp_slack(&self.r_values, value_scale)
    }
}

/// Sparse network approximating `Σ_i w_i B_i` with one subnetwork per basis
/// function and outer coefficients `μ = w`.
pub fn build_lcb_net(
    weights: &[f64],
    bases: &[GeneralizedBasisFunction<f64>],
    d: usize,
    n: usize,
    a: f64,
    r_cap: f64,
) -> Result<BoundedSparseNet> {
    if bases.is_empty() {
        return invalid("linear combination needs at least one basis function");
    }
    if weights.len() != bases.len() {
        return Err(Error::DimensionMismatch { expected: bases.len(), got: weights.len() });
    }
    let nets: Vec<BoundedApproxNet> =
        bases.iter().map(|b| build_basis_net(b, d, n, a, r_cap)).collect::<Result<_>>()?;
    let depth = nets[0].net.hidden_layers();
    if let Some(bad) = nets.iter().find(|b| b.net.hidden_layers() != depth) {
        return invalid(format!(
            "basis networks have different depths ({depth} and {})",
            bad.net.hidden_layers()
        ));
    }
    let width = nets.iter().map(|b| b.net.width()).max().unwrap_or(1);
    let wmax = weights.iter().map(|w| w.abs()).fold(0.0f64, f64::max);
    let alpha = nets.iter().map(|b| b.max_weight).fold(wmax.max(1.0), f64::max);
    let subnets = nets
        .iter()
        .map(|b| {
            let mut p = pad_width(&b.net, width)?;
            p.set_alpha(alpha);
            Ok(p)
        })
        .collect::<Result<Vec<_>>>()?;
    let worst = nets.iter().map(|b| b.theoretical_bound).fold(0.0f64, f64::max);
    let bound = bases.len() as f64 * wmax * worst;
    let r_values = nets.iter().flat_map(|b| b.r_values.clone()).collect();
    let net = SparseAdditiveNetwork::new(subnets, weights.to_vec(), alpha)?;
    Ok(BoundedSparseNet { net, a, theoretical_bound: bound, r_values })
}
