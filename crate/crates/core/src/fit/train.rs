use std::collections::VecDeque;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::data::Dataset;
use super::risk::{risk_and_gradient_unchecked, risk_unchecked, empirical_risk, Trainable};
use crate::error::{invalid, Result};
use crate::scalar::Scalar;

/// Training and truncation settings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FitConfig {
    /// Hidden layers per (sub)network.
    pub l: usize,
    /// Width per (sub)network.
    pub r: usize,
    pub alpha: f64,
    pub beta: f64,
    pub restarts: usize,
    pub max_iters: usize,
    pub tol: f64,
    pub seed: u64,
    /// Half-width of the uniform initialization interval.
    pub init_scale: f64,
}

pub const ALPHA_C1: f64 = 1e3;
pub const ALPHA_C2: f64 = 2.0;
pub const BETA_C3: f64 = 10.0;

impl Default for FitConfig {
    fn default() -> Self {
        Self {
            l: 1,
            r: 5,
            alpha: f64::MAX,
            beta: f64::MAX,
            restarts: 5,
            max_iters: 500,
            tol: 1e-8,
            seed: 0,
            init_scale: 0.5,
        }
    }
}

impl FitConfig {
    /// Defaults with `α_n = c₁ n^{c₂}` and `β_n = c₃ log n`.
    pub fn for_sample_size(n: usize) -> Self {
        let nf = (n.max(2)) as f64;
        Self { alpha: ALPHA_C1 * nf.powf(ALPHA_C2), beta: BETA_C3 * nf.ln(), ..Self::default() }
    }

    pub fn validate(&self) -> Result<()> {
        if self.l == 0 || self.r == 0 {
            return invalid("networks need L >= 1 and r >= 1");
        }
        if !(self.alpha > 0.0) || !(self.beta > 0.0) {
            return invalid("alpha and beta must be positive");
        }
        if self.restarts == 0 {
            return invalid("restarts must be at least 1");
        }
        if !(self.tol >= 0.0) || !(self.init_scale >= 0.0) {
            return invalid("tolerance and init scale must be non-negative");
        }
        Ok(())
    }
}

/// Outcome of [`train`] for the best restart.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitReport {
    pub final_risk: f64,
    pub iterations: usize,
    pub clamp_events: usize,
    pub best_restart: usize,
    pub abandoned_restarts: usize,
    /// Risk after each accepted step of the best restart, starting with the
    /// initial risk.
    pub risk_trace: Vec<f64>,
}

const ARMIJO_C: f64 = 1e-4;
const MAX_HALVINGS: usize = 60;

struct Run<T> {
    params: Vec<T>,
    risk: T,
    iterations: usize,
    clamps: usize,
    trace: Vec<f64>,
}

fn dot<T: Scalar>(a: &[T], b: &[T]) -> T {
    a.iter().zip(b).fold(T::zero(), |s, (x, y)| s + *x * *y)
}

/// Above this many parameters the inverse Hessian is kept in limited-memory
/// form instead of as a dense matrix.
pub const DENSE_BFGS_MAX_PARAMS: usize = 1500;
const LBFGS_MEMORY: usize = 20;

/// Inverse Hessian approximation, dense or as the last few `(s, y)` pairs.
enum InverseHessian<T> {
    Dense { h: Vec<T>, p: usize, hy: Vec<T> },
    Limited { pairs: VecDeque<(Vec<T>, Vec<T>, T)>, gamma: T },
}

impl<T: Scalar> InverseHessian<T> {
    fn new(p: usize) -> Self {
        if p <= DENSE_BFGS_MAX_PARAMS {
            let mut me = Self::Dense { h: vec![T::zero(); p * p], p, hy: vec![T::zero(); p] };
            me.reset();
            me
        } else {
            Self::Limited { pairs: VecDeque::new(), gamma: T::one() }
        }
    }

    fn reset(&mut self) {
        match self {
            Self::Dense { h, p, .. } => {
                h.fill(T::zero());
                for i in 0..*p {
                    h[i * *p + i] = T::one();
                }
            }
            Self::Limited { pairs, gamma } => {
                pairs.clear();
                *gamma = T::one();
            }
        }
    }

    /// `−H g`.
    fn direction(&self, g: &[T]) -> Vec<T> {
        match self {
            Self::Dense { h, p, .. } => (0..*p).map(|i| -dot(&h[i * p..(i + 1) * p], g)).collect(),
            Self::Limited { pairs, gamma } => {
                let mut q = g.to_vec();
                let mut a = Vec::with_capacity(pairs.len());
                for (s, y, rho) in pairs.iter().rev() {
                    let ai = *rho * dot(s, &q);
                    q.iter_mut().zip(y).for_each(|(v, yv)| *v = *v - ai * *yv);
                    a.push(ai);
                }
                q.iter_mut().for_each(|v| *v = *v * *gamma);
                for ((s, y, rho), ai) in pairs.iter().zip(a.into_iter().rev()) {
                    let b = *rho * dot(y, &q);
                    q.iter_mut().zip(s).for_each(|(v, sv)| *v = *v + (ai - b) * *sv);
                }
                q.iter().map(|v| -*v).collect()
            }
        }
    }

    fn update(&mut self, s: Vec<T>, y: Vec<T>, sy: T, yy: T, fresh: bool) {
        let rho = T::one() / sy;
        match self {
            Self::Dense { h, p, hy } => {
                let p = *p;
                if fresh {
                    let scale = sy / yy;
                    h.iter_mut().for_each(|v| *v = *v * scale);
                }
                for i in 0..p {
                    hy[i] = dot(&h[i * p..(i + 1) * p], &y);
                }
                let yhy = dot(&y, hy);
                let coef = rho * rho * yhy + rho;
                for i in 0..p {
                    for j in 0..p {
                        h[i * p + j] = h[i * p + j] - rho * (hy[i] * s[j] + s[i] * hy[j]) + coef * s[i] * s[j];
                    }
                }
            }
            Self::Limited { pairs, gamma } => {
                *gamma = sy / yy;
                if pairs.len() == LBFGS_MEMORY {
                    pairs.pop_front();
                }
                pairs.push_back((s, y, rho));
            }
        }
    }
}

/// Projected quasi-Newton descent with Armijo backtracking from the model's
/// current parameters. Returns `None` when the risk becomes non-finite.
fn bfgs<T: Scalar, M: Trainable<T>>(model: &mut M, data: &Dataset<T>, cfg: &FitConfig) -> Option<Run<T>> {
    let alpha = T::lit(cfg.alpha);
    let tol = T::lit(cfg.tol);
    let c = T::lit(ARMIJO_C);
    let mut clamps = model.project_weights(alpha);
    let mut x = model.params();
    let (mut f, mut g) = risk_and_gradient_unchecked(model, data);
    if !f.is_finite() {
        return None;
    }
    let mut h = InverseHessian::new(x.len());
    let mut fresh = true;
    let mut trace = vec![f.as_f64()];
    let mut iterations = 0;
    while iterations < cfg.max_iters {
        if dot(&g, &g).sqrt() <= tol {
            break;
        }
        let mut d = h.direction(&g);
        if !(dot(&g, &d) < T::zero()) {
            h.reset();
            fresh = true;
            d = g.iter().map(|v| -*v).collect();
        }
        let mut t = T::one();
        let mut accepted = None;
        for _ in 0..MAX_HALVINGS {
            let trial: Vec<T> = x.iter().zip(&d).map(|(a, b)| *a + t * *b).collect();
            model.set_params(&trial).expect("length matches");
            let k = model.project_weights(alpha);
            let xn = model.params();
            let fnew = risk_unchecked(model, data);
            let step: Vec<T> = xn.iter().zip(&x).map(|(a, b)| *a - *b).collect();
            if fnew.is_finite() && fnew <= f && fnew <= f + c * dot(&g, &step) {
                accepted = Some((xn, step, fnew, k));
                break;
            }
            t = t * T::lit(0.5);
        }
        let Some((xn, s, fnew, k)) = accepted else {
            model.set_params(&x).expect("length matches");
            if fresh {
                break;
            }
            h.reset();
            fresh = true;
            continue;
        };
        model.set_params(&xn).expect("length matches");
        let (_, gn) = risk_and_gradient_unchecked(model, data);
        if gn.iter().any(|v| !v.is_finite()) {
            return None;
        }
        let y: Vec<T> = gn.iter().zip(&g).map(|(a, b)| *a - *b).collect();
        let sy = dot(&s, &y);
        let yy = dot(&y, &y);
        if sy > T::lit(1e-12) * dot(&s, &s).sqrt() * yy.sqrt() {
            h.update(s, y, sy, yy, fresh);
            fresh = false;
        }
        x = xn;
        f = fnew;
        g = gn;
        clamps += k;
        iterations += 1;
        trace.push(f.as_f64());
    }
    model.set_params(&x).expect("length matches");
    Some(Run { params: x, risk: f, iterations, clamps, trace })
}

fn restart_seed(seed: u64, k: usize) -> u64 {
    seed.wrapping_add((k as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15))
}

/// Minimizes the empirical risk over the model's parameters from
/// `cfg.restarts` random initializations and keeps the best run. With
/// `max_iters = 0` the model is left as given.
pub fn train<T: Scalar, M: Trainable<T>>(model: &mut M, data: &Dataset<T>, cfg: &FitConfig) -> Result<FitReport> {
    cfg.validate()?;
    let initial = empirical_risk(model, data)?;
    if cfg.max_iters == 0 {
        return Ok(FitReport {
            final_risk: initial.as_f64(),
            iterations: 0,
            clamp_events: 0,
            best_restart: 0,
            abandoned_restarts: 0,
            risk_trace: vec![initial.as_f64()],
        });
    }
    let runs: Vec<Option<Run<T>>> = (0..cfg.restarts)
        .into_par_iter()
        .map(|k| {
            let mut m = model.clone();
            let mut rng = ChaCha8Rng::seed_from_u64(restart_seed(cfg.seed, k));
            m.randomize(&mut rng, cfg.init_scale);
            bfgs(&mut m, data, cfg)
        })
        .collect();
    let abandoned = runs.iter().filter(|r| r.is_none()).count();
    if abandoned > 0 {
        log::warn!("{abandoned} of {} restarts abandoned after a non-finite risk", cfg.restarts);
    }
    let best = runs
        .into_iter()
        .enumerate()
        .filter_map(|(k, r)| r.map(|r| (k, r)))
        .min_by(|(i, a), (j, b)| a.risk.partial_cmp(&b.risk).expect("finite").then(i.cmp(j)));
    let Some((k, run)) = best else {
        return invalid("every restart produced a non-finite risk");
    };
    model.set_params(&run.params)?;
    model.project_weights(T::lit(cfg.alpha));
    Ok(FitReport {
        final_risk: empirical_risk(model, data)?.as_f64(),
        iterations: run.iterations,
        clamp_events: run.clamps,
        best_restart: k,
        abandoned_restarts: abandoned,
        risk_trace: run.trace,
    })
}
