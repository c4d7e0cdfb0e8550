use rand::Rng;
use rayon::prelude::*;

use super::data::Dataset;
use crate::error::{invalid, Error, Result};
use crate::net::{DenseNetwork, SparseAdditiveNetwork};
use crate::scalar::Scalar;

/// A network whose free scalars can be read, written, projected and
/// differentiated in one fixed walk order.
pub trait Trainable<T: Scalar>: Clone + Send + Sync {
    fn input_dim(&self) -> usize;
    fn num_params(&self) -> usize;
    fn params(&self) -> Vec<T>;
    fn set_params(&mut self, p: &[T]) -> Result<()>;
    fn project_weights(&mut self, alpha: T) -> usize;
    fn predict(&self, x: &[T]) -> T;
    /// Adds `upstream · ∂f(x)/∂θ` to `grad` and returns `f(x)`.
    fn accumulate_gradient(&self, x: &[T], upstream: T, grad: &mut [T]) -> T;

    /// Draws every free scalar uniformly from `[-half, half]`.
    fn randomize<R: Rng>(&mut self, rng: &mut R, half: f64) {
        let p: Vec<T> =
            (0..self.num_params()).map(|_| T::lit(rng.random_range(-half..=half))).collect();
        self.set_params(&p).expect("length matches");
    }
}

impl<T: Scalar> Trainable<T> for DenseNetwork<T> {
    fn input_dim(&self) -> usize {
        DenseNetwork::input_dim(self)
    }
    fn num_params(&self) -> usize {
        DenseNetwork::num_params(self)
    }
    fn params(&self) -> Vec<T> {
        DenseNetwork::params(self)
    }
    fn set_params(&mut self, p: &[T]) -> Result<()> {
        DenseNetwork::set_params(self, p)
    }
    fn project_weights(&mut self, alpha: T) -> usize {
        DenseNetwork::project_weights(self, alpha)
    }
    fn predict(&self, x: &[T]) -> T {
        self.forward_unchecked(x)
    }
    fn accumulate_gradient(&self, x: &[T], upstream: T, grad: &mut [T]) -> T {
        DenseNetwork::accumulate_gradient(self, x, upstream, grad)
    }
}

impl<T: Scalar> Trainable<T> for SparseAdditiveNetwork<T> {
    fn input_dim(&self) -> usize {
        SparseAdditiveNetwork::input_dim(self)
    }
    fn num_params(&self) -> usize {
        SparseAdditiveNetwork::num_params(self)
    }
    fn params(&self) -> Vec<T> {
        SparseAdditiveNetwork::params(self)
    }
    fn set_params(&mut self, p: &[T]) -> Result<()> {
        SparseAdditiveNetwork::set_params(self, p)
    }
    fn project_weights(&mut self, alpha: T) -> usize {
        SparseAdditiveNetwork::project_weights(self, alpha)
    }
    fn predict(&self, x: &[T]) -> T {
        self.forward_unchecked(x)
    }
    fn accumulate_gradient(&self, x: &[T], upstream: T, grad: &mut [T]) -> T {
        SparseAdditiveNetwork::accumulate_gradient(self, x, upstream, grad)
    }
}

// Fixed chunking keeps parallel sums bit-identical from run to run.
const CHUNK: usize = 64;

fn check<T: Scalar, M: Trainable<T>>(model: &M, data: &Dataset<T>) -> Result<()> {
    if data.is_empty() {
        return invalid("empty dataset");
    }
    if model.input_dim() != data.dim() {
        return Err(Error::DimensionMismatch { expected: model.input_dim(), got: data.dim() });
    }
    Ok(())
}

pub(crate) fn risk_unchecked<T: Scalar, M: Trainable<T>>(model: &M, data: &Dataset<T>) -> T {
    let partial: Vec<T> = data
        .x()
        .par_chunks(CHUNK)
        .zip(data.y().par_chunks(CHUNK))
        .map(|(xs, ys)| {
            xs.iter().zip(ys).map(|(x, &y)| (y - model.predict(x)).powi(2)).sum::<T>()
        })
        .collect();
    partial.into_iter().sum::<T>() / T::lit(data.len() as f64)
}

/// `(1/n) Σ (Y_i − f(X_i))²`.
pub fn empirical_risk<T: Scalar, M: Trainable<T>>(model: &M, data: &Dataset<T>) -> Result<T> {
    check(model, data)?;
    Ok(risk_unchecked(model, data))
}

pub(crate) fn risk_and_gradient_unchecked<T: Scalar, M: Trainable<T>>(
    model: &M,
    data: &Dataset<T>,
) -> (T, Vec<T>) {
    let p = model.num_params();
    let inv_n = T::one() / T::lit(data.len() as f64);
    let two = T::lit(2.0);
    let partial: Vec<(T, Vec<T>)> = data
        .x()
        .par_chunks(CHUNK)
        .zip(data.y().par_chunks(CHUNK))
        .map(|(xs, ys)| {
            let mut g = vec![T::zero(); p];
            let mut r = T::zero();
            for (x, &y) in xs.iter().zip(ys) {
                let res = y - model.predict(x);
                r = r + res * res;
                model.accumulate_gradient(x, -two * res * inv_n, &mut g);
            }
            (r, g)
        })
        .collect();
    let mut g = vec![T::zero(); p];
    let mut r = T::zero();
    for (ri, gi) in partial {
        r = r + ri;
        for (a, b) in g.iter_mut().zip(&gi) {
            *a = *a + *b;
        }
    }
    (r * inv_n, g)
}

/// Gradient of [`empirical_risk`] with respect to every free scalar, in the
/// model's walk order.
pub fn gradient<T: Scalar, M: Trainable<T>>(model: &M, data: &Dataset<T>) -> Result<Vec<T>> {
    check(model, data)?;
    Ok(risk_and_gradient_unchecked(model, data).1)
}

/// `max{min{f(x), β}, −β}`.
pub fn truncate_predict<T: Scalar, M: Trainable<T>>(model: &M, beta: T, x: &[T]) -> Result<T> {
    if !(beta > T::zero()) {
        return invalid("truncation level must be positive");
    }
    if x.len() != model.input_dim() {
        return Err(Error::DimensionMismatch { expected: model.input_dim(), got: x.len() });
    }
    Ok(model.predict(x).min(beta).max(-beta))
}

/// Empirical risk of the truncated predictions.
pub fn truncated_risk<T: Scalar, M: Trainable<T>>(model: &M, beta: T, data: &Dataset<T>) -> Result<T> {
    check(model, data)?;
    let s = data
        .rows()
        .map(|(x, y)| (y - model.predict(x).min(beta).max(-beta)).powi(2))
        .sum::<T>();
    Ok(s / T::lit(data.len() as f64))
}
