use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::Predictor;
use crate::error::{invalid, Result};
use crate::fit::Dataset;
use crate::oracle::{GeneralizedBasisFunction, HingeFactor};

/// Product of axis-aligned hinges `(s_j (x_j − a_j))₊`; empty means the
/// constant 1.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MarsTerm {
    pub factors: Vec<(usize, f64, f64)>,
}

impl MarsTerm {
    fn constant() -> Self {
        Self { factors: Vec::new() }
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        self.factors
            .iter()
            .map(|&(j, s, a)| (s * (x[j] - a)).max(0.0))
            .product()
    }

    fn uses(&self, coord: usize) -> bool {
        self.factors.iter().any(|f| f.0 == coord)
    }

    fn with(&self, coord: usize, sign: f64, knot: f64) -> Self {
        let mut f = self.factors.clone();
        f.push((coord, sign, knot));
        Self { factors: f }
    }

    pub fn to_basis(&self) -> GeneralizedBasisFunction<f64> {
        let hinges = self
            .factors
            .iter()
            .map(|&(j, s, a)| HingeFactor::new(vec![j], vec![s], vec![a]).expect("one coordinate"))
            .collect();
        GeneralizedBasisFunction { splines: Vec::new(), hinges }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MarsConfig {
    /// Largest number of terms, intercept included, after the forward pass.
    pub max_basis: usize,
    pub gcv_penalty: f64,
    /// Largest number of hinges in one product; `None` means the input dimension.
    pub max_interaction: Option<usize>,
    /// Candidate knots per coordinate (evenly spaced order statistics of the data).
    pub max_knots: usize,
}

impl Default for MarsConfig {
    fn default() -> Self {
        Self { max_basis: 21, gcv_penalty: 3.0, max_interaction: None, max_knots: 20 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MarsModel {
    pub terms: Vec<MarsTerm>,
    pub coeffs: Vec<f64>,
    pub gcv: f64,
    /// GCV of the model at the end of the forward pass.
    pub forward_gcv: f64,
    /// RSS after each forward step, starting with the intercept-only model.
    pub forward_rss: Vec<f64>,
}

impl MarsModel {
    pub fn basis_functions(&self) -> Vec<GeneralizedBasisFunction<f64>> {
        self.terms.iter().map(MarsTerm::to_basis).collect()
    }
}

impl Predictor for MarsModel {
    fn predict(&self, x: &[f64]) -> f64 {
        self.terms.iter().zip(&self.coeffs).map(|(t, c)| c * t.eval(x)).sum()
    }

    fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(self)?)
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Removes the components along the orthonormal columns `q`; returns the
/// normalized remainder unless it is (numerically) inside their span.
fn orthonormalize(mut v: Vec<f64>, q: &[Vec<f64>]) -> Option<Vec<f64>> {
    let norm0 = dot(&v, &v).sqrt();
    if norm0 == 0.0 {
        return None;
    }
    for _ in 0..2 {
        for u in q {
            let c = dot(&v, u);
            v.iter_mut().zip(u).for_each(|(a, b)| *a -= c * b);
        }
    }
    let norm = dot(&v, &v).sqrt();
    if norm <= 1e-9 * norm0 {
        return None;
    }
    v.iter_mut().for_each(|a| *a /= norm);
    Some(v)
}

fn knots_for(values: &mut Vec<f64>, max_knots: usize) -> Vec<f64> {
    values.sort_by(f64::total_cmp);
    values.dedup();
    if values.len() <= max_knots {
        return values.clone();
    }
    let m = values.len() - 1;
    let mut k: Vec<f64> = (0..max_knots)
        .map(|i| values[(i * m + (max_knots - 1) / 2) / (max_knots - 1).max(1)])
        .collect();
    k.dedup();
    k
}

fn gcv(rss: f64, n: usize, m: usize, penalty: f64) -> f64 {
    let nf = n as f64;
    let c = m as f64 + penalty * (m as f64 - 1.0);
    if c >= nf {
        return f64::INFINITY;
    }
    rss / nf / (1.0 - c / nf).powi(2)
}

fn columns(terms: &[MarsTerm], data: &Dataset<f64>) -> Vec<Vec<f64>> {
    terms.iter().map(|t| data.x().iter().map(|x| t.eval(x)).collect()).collect()
}

/// Least-squares coefficients and RSS for the given columns.
fn refit(cols: &[Vec<f64>], y: &[f64]) -> (Vec<f64>, f64) {
    let n = y.len();
    let a = DMatrix::from_fn(n, cols.len(), |i, j| cols[j][i]);
    let b = DVector::from_column_slice(y);
    let coef = a
        .clone()
        .svd(true, true)
        .solve(&b, 1e-12)
        .map(|c| c.iter().copied().collect::<Vec<_>>())
        .unwrap_or_else(|_| vec![0.0; cols.len()]);
    let rss = (0..n)
        .map(|i| {
            let f: f64 = (0..cols.len()).map(|j| coef[j] * cols[j][i]).sum();
            (y[i] - f).powi(2)
        })
        .sum();
    (coef, rss)
}

/// Forward/backward MARS with knots at observed coordinate values.
pub fn fit_mars(data: &Dataset<f64>, cfg: &MarsConfig) -> Result<MarsModel> {
    if cfg.max_basis == 0 {
        return invalid("max_basis must be at least 1");
    }
    if !(cfg.gcv_penalty >= 0.0) || cfg.max_knots == 0 {
        return invalid("gcv penalty must be non-negative and max_knots positive");
    }
    let n = data.len();
    let d = data.dim();
    let max_inter = cfg.max_interaction.unwrap_or(d).min(d).max(1);
    let y = data.y();
    let knots: Vec<Vec<f64>> = (0..d)
        .map(|j| knots_for(&mut data.x().iter().map(|r| r[j]).collect(), cfg.max_knots))
        .collect();

    let mut terms = vec![MarsTerm::constant()];
    let mut cols: Vec<Vec<f64>> = vec![vec![1.0; n]];
    let mut q: Vec<Vec<f64>> = vec![vec![1.0 / (n as f64).sqrt(); n]];
    let mean = data.mean_y();
    let mut resid: Vec<f64> = y.iter().map(|v| v - mean).collect();
    let tss = dot(&resid, &resid);
    let mut forward_rss = vec![tss];

    while terms.len() < cfg.max_basis && dot(&resid, &resid) > 1e-12 * tss.max(f64::MIN_POSITIVE) {
        let jobs: Vec<(usize, usize, f64)> = terms
            .iter()
            .enumerate()
            .filter(|(_, t)| t.factors.len() < max_inter)
            .flat_map(|(p, t)| {
                (0..d)
                    .filter(move |&j| !t.uses(j))
                    .flat_map(|j| knots[j].iter().map(move |&a| (p, j, a)))
                    .collect::<Vec<_>>()
            })
            .collect();
        let room = cfg.max_basis - terms.len();
        let scored: Vec<(f64, usize)> = jobs
            .par_iter()
            .enumerate()
            .map(|(idx, &(p, j, a))| {
                let hinge = |s: f64| -> Vec<f64> {
                    cols[p].iter().zip(data.x()).map(|(c, x)| c * (s * (x[j] - a)).max(0.0)).collect()
                };
                let mut basis = q.clone();
                let mut gain = 0.0;
                for s in if room >= 2 { vec![1.0, -1.0] } else { vec![1.0] } {
                    if let Some(u) = orthonormalize(hinge(s), &basis) {
                        gain += dot(&resid, &u).powi(2);
                        basis.push(u);
                    }
                }
                (gain, idx)
            })
            .collect();
        let Some(&(gain, idx)) = scored
            .iter()
            .max_by(|a, b| a.0.total_cmp(&b.0).then(b.1.cmp(&a.1)))
        else {
            break;
        };
        if !(gain > 1e-12 * tss) {
            break;
        }
        let (p, j, a) = jobs[idx];
        let mut added = 0;
        for s in if room >= 2 { [1.0, -1.0].as_slice() } else { [1.0].as_slice() } {
            let t = terms[p].with(j, *s, a);
            let col: Vec<f64> = data.x().iter().map(|x| t.eval(x)).collect();
            match orthonormalize(col.clone(), &q) {
                Some(u) => {
                    let c = dot(&resid, &u);
                    resid.iter_mut().zip(&u).for_each(|(r, v)| *r -= c * v);
                    q.push(u);
                    cols.push(col);
                    terms.push(t);
                    added += 1;
                }
                None => log::warn!("dropping collinear hinge on x{j} at {a}"),
            }
        }
        if added == 0 {
            break;
        }
        forward_rss.push(dot(&resid, &resid));
    }

    // backward pass: greedily drop the term whose removal gives the lowest GCV
    let (_, full_rss) = refit(&cols, y);
    let forward_gcv = gcv(full_rss, n, terms.len(), cfg.gcv_penalty);
    let mut active: Vec<usize> = (0..terms.len()).collect();
    let mut best = (forward_gcv, active.clone());
    while active.len() > 1 {
        let trials: Vec<(f64, usize)> = (1..active.len())
            .into_par_iter()
            .map(|drop| {
                let keep: Vec<Vec<f64>> = active
                    .iter()
                    .enumerate()
                    .filter(|&(i, _)| i != drop)
                    .map(|(_, &t)| cols[t].clone())
                    .collect();
                let (_, rss) = refit(&keep, y);
                (gcv(rss, n, keep.len(), cfg.gcv_penalty), drop)
            })
            .collect();
        let &(g, drop) = trials
            .iter()
            .min_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)))
            .expect("at least one removable term");
        active.remove(drop);
        if g <= best.0 {
            best = (g, active.clone());
        }
    }
    let (g, keep) = best;
    let chosen: Vec<MarsTerm> = keep.iter().map(|&i| terms[i].clone()).collect();
    let (coeffs, _) = refit(&columns(&chosen, data), y);
    Ok(MarsModel { terms: chosen, coeffs, gcv: g, forward_gcv, forward_rss })
}
