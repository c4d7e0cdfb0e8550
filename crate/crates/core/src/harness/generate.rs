use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::stats::{derive_seed, median};
use crate::baselines::Predictor;
use crate::error::{invalid, Result};
use crate::fit::Dataset;
use crate::oracle::Target;

/// Realizations of the constant estimate behind the normalizer.
pub const NORMALIZER_REALIZATIONS: usize = 50;

const STREAM_X: u64 = 11;
const STREAM_EPS: u64 = 12;

fn draw_x(target: &Target, n: usize, rng: &mut ChaCha8Rng) -> Vec<Vec<f64>> {
    let (lo, hi) = target.domain();
    (0..n).map(|_| (0..target.dim()).map(|_| rng.random_range(lo..hi)).collect()).collect()
}

/// `n` observations `Y = m(X) + σ·λ·ε` with `X` uniform on the target's
/// domain and standard normal `ε`.
pub fn generate(target: &Target, n: usize, sigma: f64, lambda: f64, seed: u64) -> Result<Dataset<f64>> {
    if !(sigma >= 0.0) || !(lambda >= 0.0) {
        return invalid("noise scale must be non-negative");
    }
    if n == 0 {
        return invalid("sample size must be positive");
    }
    let x = draw_x(target, n, &mut ChaCha8Rng::seed_from_u64(derive_seed(seed, STREAM_X, 0)));
    let mut eps = ChaCha8Rng::seed_from_u64(derive_seed(seed, STREAM_EPS, 0));
    let y = x
        .iter()
        .map(|xi| {
            let e: f64 = eps.sample(StandardNormal);
            Ok(target.eval(xi)? + sigma * lambda * e)
        })
        .collect::<Result<Vec<_>>>()?;
    Dataset::new(x, y)
}

/// Fresh inputs with their exact regression values.
#[derive(Debug, Clone)]
pub struct EvalSet {
    pub x: Vec<Vec<f64>>,
    pub m: Vec<f64>,
}

impl EvalSet {
    pub fn draw(target: &Target, n_eval: usize, seed: u64) -> Result<Self> {
        let x = draw_x(target, n_eval, &mut ChaCha8Rng::seed_from_u64(derive_seed(seed, STREAM_X, 1)));
        let m = x.iter().map(|xi| target.eval(xi)).collect::<Result<_>>()?;
        Ok(Self { x, m })
    }

    /// `(1/N) Σ (f(X_k) − m(X_k))²`.
    pub fn error(&self, f: impl Fn(&[f64]) -> f64 + Sync) -> f64 {
        let parts: Vec<f64> = self
            .x
            .par_chunks(1024)
            .zip(self.m.par_chunks(1024))
            .map(|(xs, ms)| xs.iter().zip(ms).map(|(x, m)| (f(x) - m).powi(2)).sum::<f64>())
            .collect();
        parts.iter().sum::<f64>() / self.m.len() as f64
    }
}

/// Median over [`NORMALIZER_REALIZATIONS`] runs of the error of the mean of
/// `n` fresh observations.
pub fn normalizer(
    target: &Target,
    n: usize,
    sigma: f64,
    lambda: f64,
    n_eval: usize,
    seed: u64,
) -> Result<f64> {
    let errs: Vec<f64> = (0..NORMALIZER_REALIZATIONS)
        .into_par_iter()
        .map(|k| {
            let s = derive_seed(seed, 21, k as u64);
            let mean = generate(target, n, sigma, lambda, s)?.mean_y();
            Ok(EvalSet::draw(target, n_eval, s)?.error(|_| mean))
        })
        .collect::<Result<_>>()?;
    Ok(median(&errs))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NormalizedError {
    pub error: f64,
    pub normalizer: f64,
    pub ratio: f64,
}

/// Error of `predictor` on `n_eval` fresh inputs divided by the normalizer
/// for sample size `n`.
pub fn normalized_error(
    predictor: &dyn Predictor,
    target: &Target,
    n: usize,
    sigma: f64,
    lambda: f64,
    n_eval: usize,
    seed: u64,
) -> Result<NormalizedError> {
    if n_eval == 0 {
        return invalid("evaluation set must be non-empty");
    }
    let error = EvalSet::draw(target, n_eval, derive_seed(seed, 31, 0))?.error(|x| predictor.predict(x));
    let norm = normalizer(target, n, sigma, lambda, n_eval, derive_seed(seed, 32, 0))?;
    Ok(NormalizedError { error, normalizer: norm, ratio: error / norm })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::baselines::MeanModel;
    use crate::oracle::TargetName;

    struct Truth(Target);

    impl Predictor for Truth {
        fn predict(&self, x: &[f64]) -> f64 {
            self.0.eval(x).unwrap()
        }
        fn to_json(&self) -> Result<String> {
            Ok("{}".into())
        }
    }

    #[test]
    fn noiseless_and_seeded() {
        let t = Target::new(TargetName::M1);
        let d = generate(&t, 50, 0.0, 2.0, 3).unwrap();
        for (x, y) in d.rows() {
            assert_eq!(y, t.eval(x).unwrap());
        }
        assert_eq!(generate(&t, 50, 0.05, 2.0, 3).unwrap(), generate(&t, 50, 0.05, 2.0, 3).unwrap());
    }

    #[test]
    fn noise_variance() {
        let t = Target::new(TargetName::Fig2);
        let (sigma, lambda) = (0.2, 1.5);
        let d = generate(&t, 10_000, sigma, lambda, 9).unwrap();
        let r: Vec<f64> = d.rows().map(|(x, y)| y - t.eval(x).unwrap()).collect();
        let mean = r.iter().sum::<f64>() / r.len() as f64;
        let var = r.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (r.len() - 1) as f64;
        assert!((var / (sigma * lambda).powi(2) - 1.0).abs() < 0.05);
    }

    #[test]
    fn truth_and_mean_ratios() {
        for name in [TargetName::M1, TargetName::M2, TargetName::M3, TargetName::Fig2] {
            let t = Target::new(name);
            let e = normalized_error(&Truth(t.clone()), &t, 100, 0.0, 1.0, 1000, 4).unwrap();
            assert_eq!(e.ratio, 0.0);
        }
        let t = Target::new(TargetName::M1);
        let mean = MeanModel::fit(&generate(&t, 100, 0.05, 2.72, 77).unwrap());
        let e = normalized_error(&mean, &t, 100, 0.05, 2.72, 10_000, 5).unwrap();
        assert!((e.ratio - 1.0).abs() < 0.2, "{e:?}");
    }
}
