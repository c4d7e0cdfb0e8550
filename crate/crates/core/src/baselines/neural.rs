use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{argmin, Predictor};
use crate::error::{invalid, Result};
use crate::fit::{select_model, train, truncated_risk, Dataset, FitConfig, FitReport, Trainable};
use crate::net::{DenseDoc, DenseNetwork, SparseAdditiveNetwork, SparseDoc};

/// Depth grid for the fully connected competitor.
pub const FCNN_L_GRID: [usize; 7] = [1, 2, 4, 6, 8, 10, 12];

/// Constant predictor.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeanModel {
    pub mean: f64,
}

impl MeanModel {
    pub fn fit(data: &Dataset<f64>) -> Self {
        Self { mean: data.mean_y() }
    }
}

impl Predictor for MeanModel {
    fn predict(&self, _x: &[f64]) -> f64 {
        self.mean
    }

    fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(self)?)
    }
}

/// Truncated sparse additive network estimate.
#[derive(Debug, Clone)]
pub struct SparseNetModel {
    pub l: usize,
    pub r: usize,
    pub m_star: usize,
    pub beta: f64,
    pub net: SparseAdditiveNetwork<f64>,
}

#[derive(Serialize)]
struct SparseOut<'a> {
    l: usize,
    r: usize,
    m_star: usize,
    beta: f64,
    net: &'a SparseDoc,
}

impl Predictor for SparseNetModel {
    fn predict(&self, x: &[f64]) -> f64 {
        self.net.predict(x).clamp(-self.beta, self.beta)
    }

    fn to_json(&self) -> Result<String> {
        let doc = self.net.to_doc();
        let out = SparseOut { l: self.l, r: self.r, m_star: self.m_star, beta: self.beta, net: &doc };
        Ok(serde_json::to_string(&out)?)
    }
}

/// The sparse estimate with `L`, `r` and `M*` chosen on the testing part of
/// the sample.
pub fn fit_neural_sc(
    data: &Dataset<f64>,
    l_candidates: &[usize],
    r_candidates: &[usize],
    m_candidates: &[usize],
    cfg: &FitConfig,
    split_fraction: f64,
) -> Result<SparseNetModel> {
    if l_candidates.is_empty() || r_candidates.is_empty() {
        return invalid("sparse network grid is empty");
    }
    let grid: Vec<(usize, usize)> =
        l_candidates.iter().flat_map(|&l| r_candidates.iter().map(move |&r| (l, r))).collect();
    let fits: Vec<(SparseNetModel, f64)> = grid
        .par_iter()
        .map(|&(l, r)| {
            let s = select_model(data, m_candidates, &FitConfig { l, r, ..cfg.clone() }, split_fraction)?;
            let score = s.scores.iter().map(|c| c.test_risk).fold(f64::INFINITY, f64::min);
            Ok((SparseNetModel { l, r, m_star: s.m_star, beta: cfg.beta, net: s.net }, score))
        })
        .collect::<Result<_>>()?;
    let scores: Vec<f64> = fits.iter().map(|f| f.1).collect();
    let best = argmin(&scores).unwrap_or(0);
    Ok(fits.into_iter().nth(best).expect("index in range").0)
}

/// Truncated fully connected network estimate.
#[derive(Debug, Clone)]
pub struct FcnnModel {
    pub l: usize,
    pub r: usize,
    pub beta: f64,
    pub net: DenseNetwork<f64>,
    pub report: FitReport,
}

#[derive(Serialize)]
struct FcnnOut<'a> {
    l: usize,
    r: usize,
    beta: f64,
    net: &'a DenseDoc,
}

impl Predictor for FcnnModel {
    fn predict(&self, x: &[f64]) -> f64 {
        self.net.predict(x).clamp(-self.beta, self.beta)
    }

    fn to_json(&self) -> Result<String> {
        let doc = self.net.to_doc();
        Ok(serde_json::to_string(&FcnnOut { l: self.l, r: self.r, beta: self.beta, net: &doc })?)
    }
}

/// Trains one fully connected network per `(L, r)` on the learning part and
/// keeps the one with the smallest truncated risk on the testing part.
pub fn fit_fcnn(
    data: &Dataset<f64>,
    l_candidates: &[usize],
    r_candidates: &[usize],
    cfg: &FitConfig,
    split_fraction: f64,
) -> Result<FcnnModel> {
    if l_candidates.is_empty() || r_candidates.is_empty() {
        return invalid("fully connected grid is empty");
    }
    cfg.validate()?;
    let (learn, test) = data.split(split_fraction)?;
    let grid: Vec<(usize, usize)> =
        l_candidates.iter().flat_map(|&l| r_candidates.iter().map(move |&r| (l, r))).collect();
    let fits: Vec<(FcnnModel, f64)> = grid
        .par_iter()
        .map(|&(l, r)| {
            let mut net = DenseNetwork::zeros(data.dim(), l, r, cfg.alpha)?;
            let report = train(&mut net, &learn, &FitConfig { l, r, ..cfg.clone() })?;
            let score = truncated_risk(&net, cfg.beta, &test)?;
            Ok((FcnnModel { l, r, beta: cfg.beta, net, report }, score))
        })
        .collect::<Result<_>>()?;
    let scores: Vec<f64> = fits.iter().map(|f| f.1).collect();
    let best = argmin(&scores).unwrap_or(0);
    Ok(fits.into_iter().nth(best).expect("index in range").0)
}
