use serde::{Deserialize, Serialize};

use super::{argmin, Predictor};
use crate::error::{invalid, Result};
use crate::fit::Dataset;

/// `{1, 2, 3} ∪ {4, 8, 12, …}` up to `n`.
pub fn knn_candidates(n: usize) -> Vec<usize> {
    let mut k: Vec<usize> = (1..=3).chain((1..).map(|i| 4 * i).take_while(|&v| v <= n)).collect();
    k.retain(|&v| v <= n);
    k
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KnnModel {
    pub k: usize,
    x: Vec<Vec<f64>>,
    y: Vec<f64>,
}

impl KnnModel {
    pub fn new(data: &Dataset<f64>, k: usize) -> Result<Self> {
        if k == 0 || k > data.len() {
            return invalid(format!("k = {k} must lie in 1..={}", data.len()));
        }
        Ok(Self { k, x: data.x().to_vec(), y: data.y().to_vec() })
    }
}

impl Predictor for KnnModel {
    /// Mean response of the `k` nearest points; equal distances go to the
    /// smaller index.
    fn predict(&self, q: &[f64]) -> f64 {
        let mut d: Vec<(f64, usize)> = self
            .x
            .iter()
            .enumerate()
            .map(|(i, p)| (p.iter().zip(q).map(|(a, b)| (a - b) * (a - b)).sum(), i))
            .collect();
        let key = |a: &(f64, usize), b: &(f64, usize)| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1));
        if self.k < d.len() {
            d.select_nth_unstable_by(self.k - 1, key);
        }
        d[..self.k].iter().map(|&(_, i)| self.y[i]).sum::<f64>() / self.k as f64
    }

    fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(self)?)
    }
}

/// Chooses `k` by the risk on the testing part of the sample.
pub fn fit_knn(data: &Dataset<f64>, k_candidates: &[usize], split_fraction: f64) -> Result<KnnModel> {
    if k_candidates.is_empty() {
        return invalid("no candidate k");
    }
    let (learn, test) = data.split(split_fraction)?;
    let ks: Vec<usize> = k_candidates.iter().copied().filter(|&k| k >= 1 && k <= learn.len()).collect();
    if ks.is_empty() {
        return invalid(format!("every candidate k exceeds the {} learning points", learn.len()));
    }
    let models = ks.iter().map(|&k| KnnModel::new(&learn, k)).collect::<Result<Vec<_>>>()?;
    let scores: Vec<f64> = models.iter().map(|m| m.risk(&test)).collect();
    let best = argmin(&scores).unwrap_or(0);
    Ok(models.into_iter().nth(best).expect("index in range"))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn brute(x: &[Vec<f64>], y: &[f64], k: usize, q: &[f64]) -> f64 {
        let mut idx: Vec<usize> = (0..x.len()).collect();
        let dist = |i: usize| x[i].iter().zip(q).map(|(a, b)| (a - b).powi(2)).sum::<f64>();
        idx.sort_by(|&a, &b| dist(a).partial_cmp(&dist(b)).unwrap().then(a.cmp(&b)));
        idx[..k].iter().map(|&i| y[i]).sum::<f64>() / k as f64
    }

    #[test]
    fn candidates() {
        assert_eq!(knn_candidates(13), vec![1, 2, 3, 4, 8, 12]);
        assert_eq!(knn_candidates(2), vec![1, 2]);
    }

    #[test]
    fn exact_cases() {
        let data = Dataset::new(
            vec![vec![0.0], vec![1.0], vec![2.0], vec![3.0], vec![4.0]],
            vec![1.0, 2.0, 4.0, 8.0, 16.0],
        )
        .unwrap();
        assert_eq!(KnnModel::new(&data, 1).unwrap().predict(&[2.0]), 4.0);
        assert_eq!(KnnModel::new(&data, 5).unwrap().predict(&[9.0]), 31.0 / 5.0);
        assert_eq!(KnnModel::new(&data, 2).unwrap().predict(&[2.4]), 6.0);
        // tie at 0.5 from points 0 and 1 goes to the smaller index
        assert_eq!(KnnModel::new(&data, 1).unwrap().predict(&[0.5]), 1.0);
        assert!(fit_knn(&data, &[], 0.8).is_err());
    }

    #[test]
    fn matches_brute_force() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for _ in 0..10 {
            let n = rng.random_range(5..60);
            let x: Vec<Vec<f64>> = (0..n).map(|_| vec![rng.random(), rng.random()]).collect();
            let y: Vec<f64> = (0..n).map(|_| rng.random()).collect();
            let data = Dataset::new(x.clone(), y.clone()).unwrap();
            let k = rng.random_range(1..=n);
            let m = KnnModel::new(&data, k).unwrap();
            let q = [rng.random(), rng.random()];
            assert!((m.predict(&q) - brute(&x, &y, k, &q)).abs() < 1e-12);
        }
    }
}
