use std::fmt;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::calibrate::calibrate_lambda;
use super::generate::{generate, normalizer, EvalSet};
use super::stats::{derive_seed, iqr, median};
use crate::baselines::{
    fit_fcnn, fit_knn, fit_mars, fit_neural_sc, fit_rbf, knn_candidates, MarsConfig, MeanModel, Predictor,
    FCNN_L_GRID, RBF_RADII,
};
use crate::error::{invalid, Error, Result};
use crate::fit::{Dataset, FitConfig};
use crate::net::to_string_17;
use crate::oracle::{Target, TargetName};

pub const RESULT_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EstimatorName {
    Mean,
    NeuralSc,
    NeuralFc,
    Knn,
    Rbf,
    Mars,
}

impl EstimatorName {
    pub const ALL: [EstimatorName; 6] =
        [Self::Mean, Self::NeuralSc, Self::NeuralFc, Self::Knn, Self::Rbf, Self::Mars];

    fn as_str(self) -> &'static str {
        match self {
            Self::Mean => "mean",
            Self::NeuralSc => "neural-sc",
            Self::NeuralFc => "neural-fc",
            Self::Knn => "knn",
            Self::Rbf => "rbf",
            Self::Mars => "mars",
        }
    }
}

impl fmt::Display for EstimatorName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for EstimatorName {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.to_ascii_lowercase();
        Self::ALL
            .into_iter()
            .find(|e| e.as_str() == s)
            .ok_or_else(|| Error::InvalidArgument(format!("unknown estimator `{s}`")))
    }
}

/// Parameter grids searched on the testing part of each sample.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Grids {
    pub sc_l: Vec<usize>,
    pub sc_r: Vec<usize>,
    pub sc_m: Vec<usize>,
    pub fc_l: Vec<usize>,
    pub fc_r: Vec<usize>,
    /// `None` means `{1, 2, 3} ∪ {4i}` up to the learning-set size.
    pub knn_k: Option<Vec<usize>>,
    pub rbf_radii: Vec<f64>,
}

impl Default for Grids {
    fn default() -> Self {
        Self {
            sc_l: vec![1, 3],
            sc_r: vec![3, 6],
            sc_m: vec![1, 2, 4, 8],
            fc_l: vec![1, 2, 4],
            fc_r: vec![2, 4, 6],
            knn_k: None,
            rbf_radii: RBF_RADII.to_vec(),
        }
    }
}

impl Grids {
    pub fn full_scale() -> Self {
        Self {
            sc_l: vec![1, 3, 6],
            sc_r: vec![3, 6, 10],
            sc_m: (1..=10).collect(),
            fc_l: FCNN_L_GRID.to_vec(),
            fc_r: vec![1, 2, 3, 4, 5, 6, 8, 10],
            knn_k: None,
            rbf_radii: RBF_RADII.to_vec(),
        }
    }
}

/// Optimizer settings shared by the network estimators. `α_n` and `β_n`
/// follow the sample size.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FitSettings {
    pub restarts: usize,
    pub max_iters: usize,
    pub tol: f64,
    pub init_scale: f64,
}

impl Default for FitSettings {
    fn default() -> Self {
        Self { restarts: 2, max_iters: 200, tol: 1e-8, init_scale: 0.5 }
    }
}

impl FitSettings {
    fn config(&self, n: usize, seed: u64) -> FitConfig {
        FitConfig {
            restarts: self.restarts,
            max_iters: self.max_iters,
            tol: self.tol,
            init_scale: self.init_scale,
            seed,
            ..FitConfig::for_sample_size(n)
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ExperimentConfig {
    pub target: TargetName,
    pub n: usize,
    pub noise_sigma: f64,
    pub repetitions: usize,
    pub n_eval: usize,
    pub estimators: Vec<EstimatorName>,
    pub seed: u64,
    pub lambda_mc_samples: usize,
    pub lambda_mc_repeats: usize,
    /// Skips calibration when set.
    pub lambda: Option<f64>,
    pub split: f64,
    pub grids: Grids,
    pub fit: FitSettings,
    pub mars: MarsConfig,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            target: TargetName::M1,
            n: 100,
            noise_sigma: 0.05,
            repetitions: 5,
            n_eval: 10_000,
            estimators: EstimatorName::ALL.to_vec(),
            seed: 0,
            lambda_mc_samples: 10_000,
            lambda_mc_repeats: 10,
            lambda: None,
            split: 0.8,
            grids: Grids::default(),
            fit: FitSettings::default(),
            mars: MarsConfig::default(),
        }
    }
}

impl ExperimentConfig {
    /// Repetition count, evaluation size, calibration budget and grids of the
    /// original study.
    pub fn full_scale(self) -> Self {
        Self {
            repetitions: 50,
            n_eval: 100_000,
            lambda_mc_samples: 100_000,
            lambda_mc_repeats: 100,
            grids: Grids::full_scale(),
            fit: FitSettings { restarts: 5, max_iters: 500, ..self.fit },
            ..self
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n < 10 {
            return invalid("n must be at least 10");
        }
        if self.repetitions == 0 {
            return invalid("repetitions must be at least 1");
        }
        if self.n_eval == 0 {
            return invalid("n_eval must be positive");
        }
        if !(self.noise_sigma >= 0.0) {
            return invalid("noise_sigma must be non-negative");
        }
        if !(self.split > 0.0 && self.split < 1.0) {
            return invalid("split must lie in (0, 1)");
        }
        if self.estimators.is_empty() {
            return invalid("no estimators configured");
        }
        if let Some(l) = self.lambda {
            if !(l >= 0.0) {
                return invalid("lambda must be non-negative");
            }
        }
        Ok(())
    }
}

/// Fits `which` on `data` with the configured grid.
pub fn fit_estimator(
    which: EstimatorName,
    data: &Dataset<f64>,
    cfg: &ExperimentConfig,
    seed: u64,
) -> Result<Box<dyn Predictor>> {
    let g = &cfg.grids;
    let fit = cfg.fit.config(data.len(), seed);
    Ok(match which {
        EstimatorName::Mean => Box::new(MeanModel::fit(data)),
        EstimatorName::NeuralSc => Box::new(fit_neural_sc(data, &g.sc_l, &g.sc_r, &g.sc_m, &fit, cfg.split)?),
        EstimatorName::NeuralFc => Box::new(fit_fcnn(data, &g.fc_l, &g.fc_r, &fit, cfg.split)?),
        EstimatorName::Knn => {
            let learn = (cfg.split * data.len() as f64).ceil() as usize;
            let ks = g.knn_k.clone().unwrap_or_else(|| knn_candidates(learn));
            Box::new(fit_knn(data, &ks, cfg.split)?)
        }
        EstimatorName::Rbf => Box::new(fit_rbf(data, &g.rbf_radii, cfg.split)?),
        EstimatorName::Mars => Box::new(fit_mars(data, &cfg.mars)?),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimatorRow {
    pub estimator: EstimatorName,
    pub median: f64,
    pub iqr: f64,
    /// Normalized error per repetition; `None` where the fit failed.
    pub ratios: Vec<Option<f64>>,
    pub missing: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultTable {
    pub version: u32,
    pub target: TargetName,
    pub n: usize,
    pub noise_sigma: f64,
    pub lambda: f64,
    pub repetitions: usize,
    pub n_eval: usize,
    pub seed: u64,
    /// Median error of the constant mean estimate.
    pub normalizer: f64,
    pub rows: Vec<EstimatorRow>,
}

impl ResultTable {
    pub fn to_json(&self) -> Result<String> {
        to_string_17(self)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let t: Self = serde_json::from_str(s)?;
        if t.version != RESULT_VERSION {
            return Err(Error::Version { found: t.version, expected: RESULT_VERSION });
        }
        Ok(t)
    }

    pub fn row(&self, which: EstimatorName) -> Option<&EstimatorRow> {
        self.rows.iter().find(|r| r.estimator == which)
    }
}

fn aggregate(estimator: EstimatorName, ratios: Vec<Option<f64>>) -> EstimatorRow {
    let ok: Vec<f64> = ratios.iter().flatten().copied().collect();
    let missing = ratios.len() - ok.len();
    let (median, iqr) = if ok.is_empty() { (f64::NAN, f64::NAN) } else { (median(&ok), iqr(&ok)) };
    EstimatorRow { estimator, median, iqr, ratios, missing }
}

/// Runs every repetition (in parallel, each with its own derived seed) and
/// aggregates the normalized errors per estimator.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ResultTable> {
    cfg.validate()?;
    let target = Target::new(cfg.target);
    let lambda = match cfg.lambda {
        Some(l) => l,
        None => {
            let est = calibrate_lambda(&target, cfg.lambda_mc_samples, cfg.lambda_mc_repeats, derive_seed(cfg.seed, 40, 0))?;
            log::info!("calibrated lambda = {:.4} for {}", est.lambda, cfg.target);
            est.lambda
        }
    };
    let norm = normalizer(&target, cfg.n, cfg.noise_sigma, lambda, cfg.n_eval, derive_seed(cfg.seed, 43, 0))?;
    let per_rep: Vec<Vec<Option<f64>>> = (0..cfg.repetitions)
        .into_par_iter()
        .map(|rep| {
            let s = derive_seed(cfg.seed, 41, rep as u64);
            let data = generate(&target, cfg.n, cfg.noise_sigma, lambda, s)?;
            let eval = EvalSet::draw(&target, cfg.n_eval, derive_seed(s, 42, 0))?;
            Ok(cfg
                .estimators
                .iter()
                .map(|&e| match fit_estimator(e, &data, cfg, derive_seed(s, 44, 0)) {
                    Ok(p) => Some(eval.error(|x| p.predict(x)) / norm),
                    Err(err) => {
                        log::warn!("{e} failed in repetition {rep}: {err}");
                        None
                    }
                })
                .collect())
        })
        .collect::<Result<_>>()?;
    let rows = cfg
        .estimators
        .iter()
        .enumerate()
        .map(|(j, &e)| aggregate(e, per_rep.iter().map(|r| r[j]).collect()))
        .collect();
    Ok(ResultTable {
        version: RESULT_VERSION,
        target: cfg.target,
        n: cfg.n,
        noise_sigma: cfg.noise_sigma,
        lambda,
        repetitions: cfg.repetitions,
        n_eval: cfg.n_eval,
        seed: cfg.seed,
        normalizer: norm,
        rows,
    })
}

/// Plain text rendering with one line per estimator, `median (IQR)`.
pub fn render_table(tables: &[ResultTable]) -> String {
    let mut out = String::new();
    for t in tables {
        out.push_str(&format!(
            "{}  n={}  sigma={}%  lambda={:.4}  reps={}\n",
            t.target,
            t.n,
            (t.noise_sigma * 100.0).round(),
            t.lambda,
            t.repetitions
        ));
        out.push_str(&format!("  {:<12}{:.4}\n", "normalizer", t.normalizer));
        for r in &t.rows {
            let miss = if r.missing > 0 { format!("  [{} missing]", r.missing) } else { String::new() };
            out.push_str(&format!("  {:<12}{:.4} ({:.4}){miss}\n", r.estimator.to_string(), r.median, r.iqr));
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RealDataConfig {
    /// Rows used for fitting (learning and testing); the rest measure the error.
    pub n_fit: usize,
    /// Estimator list, seed, split, grids and fit settings.
    #[serde(flatten)]
    pub experiment: ExperimentConfig,
}

impl Default for RealDataConfig {
    fn default() -> Self {
        Self { n_fit: 500, experiment: ExperimentConfig::default() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RealDataRow {
    pub estimator: EstimatorName,
    /// Held-out mean squared error over that of the mean of the fitting rows.
    pub ratio: Option<f64>,
}

/// Shuffles the rows under `seed`, fits on the first `n_fit` and reports
/// normalized held-out errors.
pub fn run_real_data(data: &Dataset<f64>, cfg: &RealDataConfig) -> Result<Vec<RealDataRow>> {
    if cfg.n_fit < 10 || cfg.n_fit >= data.len() {
        return invalid(format!("n_fit must lie in [10, {})", data.len()));
    }
    let mut idx: Vec<usize> = (0..data.len()).collect();
    idx.shuffle(&mut ChaCha8Rng::seed_from_u64(derive_seed(cfg.experiment.seed, 51, 0)));
    let pick = |ids: &[usize]| {
        Dataset::new(ids.iter().map(|&i| data.x()[i].clone()).collect(), ids.iter().map(|&i| data.y()[i]).collect())
    };
    let fit = pick(&idx[..cfg.n_fit])?;
    let held = pick(&idx[cfg.n_fit..])?;
    let mse = |p: &dyn Predictor| held.rows().map(|(x, y)| (p.predict(x) - y).powi(2)).sum::<f64>() / held.len() as f64;
    let base = mse(&MeanModel::fit(&fit));
    Ok(cfg
        .experiment
        .estimators
        .iter()
        .map(|&e| {
            let ratio = match fit_estimator(e, &fit, &cfg.experiment, derive_seed(cfg.experiment.seed, 52, 0)) {
                Ok(p) => Some(mse(p.as_ref()) / base),
                Err(err) => {
                    log::warn!("{e} failed: {err}");
                    None
                }
            };
            RealDataRow { estimator: e, ratio }
        })
        .collect())
}
