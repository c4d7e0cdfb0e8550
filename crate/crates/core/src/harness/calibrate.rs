use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::stats::{derive_seed, iqr, median};
use crate::error::{invalid, Result};
use crate::oracle::Target;

/// Pieces with fewer samples than this in a repetition are left out.
pub const MIN_PIECE_SAMPLES: usize = 30;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LambdaEstimate {
    pub lambda: f64,
    /// Median over repetitions of the per-piece interquartile range; `None`
    /// for pieces that never received enough samples.
    pub per_piece: Vec<Option<f64>>,
    pub clamp_events: u64,
}

/// Noise scale: the interquartile range of `f(X)` on each piece, stabilized
/// by the median over `repeats` independent samples and averaged over pieces.
pub fn calibrate_lambda_with<F, P>(
    f: F,
    piece_of: P,
    pieces: usize,
    dim: usize,
    domain: (f64, f64),
    samples: usize,
    repeats: usize,
    seed: u64,
) -> Result<LambdaEstimate>
where
    F: Fn(&[f64]) -> Result<f64> + Sync,
    P: Fn(usize, &[f64]) -> bool + Sync,
{
    if samples == 0 || repeats == 0 || pieces == 0 {
        return invalid("calibration needs samples, repeats and pieces");
    }
    let per_rep: Vec<Vec<Option<f64>>> = (0..repeats)
        .into_par_iter()
        .map(|rep| {
            let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, 1, rep as u64));
            let mut values: Vec<Vec<f64>> = vec![Vec::new(); pieces];
            let mut x = vec![0.0; dim];
            for _ in 0..samples {
                x.iter_mut().for_each(|v| *v = rng.random_range(domain.0..domain.1));
                let y = f(&x)?;
                for (k, bucket) in values.iter_mut().enumerate() {
                    if piece_of(k, &x) {
                        bucket.push(y);
                    }
                }
            }
            Ok(values
                .iter()
                .map(|v| (v.len() >= MIN_PIECE_SAMPLES).then(|| iqr(v)))
                .collect())
        })
        .collect::<Result<_>>()?;
    let per_piece: Vec<Option<f64>> = (0..pieces)
        .map(|k| {
            let v: Vec<f64> = per_rep.iter().filter_map(|r| r[k]).collect();
            if v.is_empty() {
                log::warn!("piece {k} received fewer than {MIN_PIECE_SAMPLES} samples; excluded");
                None
            } else {
                Some(median(&v))
            }
        })
        .collect();
    let used: Vec<f64> = per_piece.iter().flatten().copied().collect();
    if used.is_empty() {
        return invalid("no piece received enough samples");
    }
    let lambda = used.iter().sum::<f64>() / used.len() as f64;
    Ok(LambdaEstimate { lambda, per_piece, clamp_events: 0 })
}

/// [`calibrate_lambda_with`] for a built-in target.
pub fn calibrate_lambda(target: &Target, samples: usize, repeats: usize, seed: u64) -> Result<LambdaEstimate> {
    let before = target.clamp_events();
    let mut est = calibrate_lambda_with(
        |x| target.eval(x),
        |k, x| target.in_piece(k, x),
        target.num_pieces(),
        target.dim(),
        target.domain(),
        samples,
        repeats,
        seed,
    )?;
    est.clamp_events = target.clamp_events() - before;
    Ok(est)
}
