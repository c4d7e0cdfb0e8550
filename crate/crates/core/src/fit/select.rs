use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::data::Dataset;
use super::risk::truncated_risk;
use super::train::{train, FitConfig, FitReport};
use crate::error::{invalid, Result};
use crate::net::SparseAdditiveNetwork;
use crate::scalar::Scalar;

/// `{2^l : l = 1, …, ⌈log₂ n⌉}`.
pub fn default_candidates(n: usize) -> Vec<usize> {
    let top = (n.max(2) as f64).log2().ceil() as u32;
    (1..=top.max(1)).map(|l| 1usize << l).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CandidateScore {
    pub m_star: usize,
    pub test_risk: f64,
    pub report: FitReport,
}

#[derive(Debug, Clone)]
pub struct Selection<T> {
    pub m_star: usize,
    pub net: SparseAdditiveNetwork<T>,
    pub scores: Vec<CandidateScore>,
}

/// Fits one sparse network per candidate `M*` on the learning part and
/// keeps the one whose truncated predictions have the smallest risk on the
/// testing part (ties go to the smaller `M*`).
pub fn select_model<T: Scalar>(
    data: &Dataset<T>,
    candidates: &[usize],
    cfg: &FitConfig,
    split_fraction: f64,
) -> Result<Selection<T>> {
    if candidates.is_empty() {
        return invalid("candidate list is empty");
    }
    if candidates.contains(&0) {
        return invalid("M* must be at least 1");
    }
    cfg.validate()?;
    let (learn, test) = data.split(split_fraction)?;
    let alpha = T::lit(cfg.alpha);
    let fitted: Vec<(SparseAdditiveNetwork<T>, CandidateScore)> = candidates
        .par_iter()
        .map(|&m| {
            let mut net = SparseAdditiveNetwork::zeros(data.dim(), cfg.l, cfg.r, m, alpha)?;
            let report = train(&mut net, &learn, cfg)?;
            let test_risk = truncated_risk(&net, T::lit(cfg.beta), &test)?.as_f64();
            Ok((net, CandidateScore { m_star: m, test_risk, report }))
        })
        .collect::<Result<_>>()?;
    let best = fitted
        .iter()
        .enumerate()
        .min_by(|(_, (_, a)), (_, (_, b))| {
            a.test_risk.total_cmp(&b.test_risk).then(a.m_star.cmp(&b.m_star))
        })
        .map(|(i, _)| i)
        .expect("non-empty");
    let scores = fitted.iter().map(|(_, s)| s.clone()).collect();
    let (net, score) = fitted.into_iter().nth(best).expect("index in range");
    Ok(Selection { m_star: score.m_star, net, scores })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn data(n: usize) -> Dataset<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let x: Vec<Vec<f64>> = (0..n).map(|_| vec![rng.random(), rng.random()]).collect();
        let y = x.iter().map(|r| (3.0 * r[0]).sin() + r[1]).collect();
        Dataset::new(x, y).unwrap()
    }

    #[test]
    fn candidate_grid() {
        assert_eq!(default_candidates(100), vec![2, 4, 8, 16, 32, 64, 128]);
        assert_eq!(default_candidates(2), vec![2]);
    }

    #[test]
    fn single_candidate_and_errors() {
        let d = data(30);
        let cfg = FitConfig { restarts: 1, max_iters: 20, r: 2, ..FitConfig::for_sample_size(30) };
        let s = select_model(&d, &[3], &cfg, 0.8).unwrap();
        assert_eq!(s.m_star, 3);
        assert!(select_model(&d, &[], &cfg, 0.8).is_err());
        assert!(select_model(&d, &[2], &cfg, 0.99).is_err());
    }

    #[test]
    fn picks_argmin_and_repeats() {
        let d = data(60);
        let cfg = FitConfig { restarts: 2, max_iters: 60, r: 2, seed: 4, ..FitConfig::for_sample_size(60) };
        let a = select_model(&d, &[1, 2, 4], &cfg, 0.8).unwrap();
        let best = a.scores.iter().map(|s| s.test_risk).fold(f64::INFINITY, f64::min);
        let chosen = a.scores.iter().find(|s| s.m_star == a.m_star).unwrap();
        assert_eq!(chosen.test_risk, best);
        let b = select_model(&d, &[1, 2, 4], &cfg, 0.8).unwrap();
        assert_eq!(a.m_star, b.m_star);
        assert_eq!(a.net.params(), b.net.params());
    }
}
