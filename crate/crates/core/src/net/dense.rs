use serde::{Deserialize, Serialize};

use super::activation::Activation;
use crate::error::{invalid, Error, Result};
use crate::scalar::Scalar;

/// Affine map `z = W h + b` with `W` stored row-major (`rows × cols`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Layer<T> {
    pub rows: usize,
    pub cols: usize,
    pub w: Vec<T>,
    pub b: Vec<T>,
}

impl<T: Scalar> Layer<T> {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self { rows, cols, w: vec![T::zero(); rows * cols], b: vec![T::zero(); rows] }
    }

    pub fn from_rows(w: Vec<Vec<T>>, b: Vec<T>) -> Result<Self> {
        let rows = w.len();
        let cols = w.first().map_or(0, Vec::len);
        if b.len() != rows {
            return Err(Error::DimensionMismatch { expected: rows, got: b.len() });
        }
        if w.iter().any(|row| row.len() != cols) {
            return invalid("ragged weight matrix");
        }
        Ok(Self { rows, cols, w: w.into_iter().flatten().collect(), b })
    }

    #[inline]
    pub fn weight(&self, i: usize, j: usize) -> T {
        self.w[i * self.cols + j]
    }

    #[inline]
    pub fn weight_mut(&mut self, i: usize, j: usize) -> &mut T {
        &mut self.w[i * self.cols + j]
    }

    pub fn num_params(&self) -> usize {
        self.w.len() + self.b.len()
    }

    #[inline]
    pub(crate) fn affine_into(&self, input: &[T], out: &mut Vec<T>) {
        out.clear();
        for i in 0..self.rows {
            let row = &self.w[i * self.cols..(i + 1) * self.cols];
            let mut z = self.b[i];
            for (wij, &hj) in row.iter().zip(input) {
                z = z + *wij * hj;
            }
            out.push(z);
        }
    }

    fn max_abs(&self) -> T {
        self.w.iter().chain(&self.b).fold(T::zero(), |m, v| m.max(v.abs()))
    }
}

/// Fully connected feedforward network with `L` sigmoidal hidden layers of
/// uniform width `r` and an affine output unit: a member of `F(L, r, α)`.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseNetwork<T> {
    input_dim: usize,
    width: usize,
    alpha: T,
    activation: Activation,
    /// `L` hidden layers followed by the `1 × r` output layer.
    layers: Vec<Layer<T>>,
}

impl<T: Scalar> DenseNetwork<T> {
    /// All-zero network with the given architecture.
    pub fn zeros(input_dim: usize, hidden_layers: usize, width: usize, alpha: T) -> Result<Self> {
        check_arch(input_dim, hidden_layers, width)?;
        let mut layers = Vec::with_capacity(hidden_layers + 1);
        layers.push(Layer::zeros(width, input_dim));
        for _ in 1..hidden_layers {
            layers.push(Layer::zeros(width, width));
        }
        layers.push(Layer::zeros(1, width));
        Self::from_layers(input_dim, layers, alpha, Activation::logistic())
    }

    /// Assembles a network from explicit layers; shapes must be
    /// `r×d, r×r, …, r×r, 1×r`.
    pub fn from_layers(
        input_dim: usize,
        layers: Vec<Layer<T>>,
        alpha: T,
        activation: Activation,
    ) -> Result<Self> {
        if layers.len() < 2 {
            return invalid("a network needs at least one hidden layer and an output layer");
        }
        let width = layers[0].rows;
        check_arch(input_dim, layers.len() - 1, width)?;
        if !(alpha > T::zero()) {
            return invalid("weight bound must be positive");
        }
        for (k, layer) in layers.iter().enumerate() {
            let last = k + 1 == layers.len();
            let rows = if last { 1 } else { width };
            let cols = if k == 0 { input_dim } else { width };
            if layer.rows != rows || layer.cols != cols {
                return invalid(format!(
                    "layer {k} has shape {}x{}, expected {rows}x{cols}",
                    layer.rows, layer.cols
                ));
            }
            if layer.w.len() != rows * cols || layer.b.len() != rows {
                return invalid(format!("layer {k} storage does not match its shape"));
            }
        }
        Ok(Self { input_dim, width, alpha, activation, layers })
    }

    pub fn input_dim(&self) -> usize {
        self.input_dim
    }

    pub fn hidden_layers(&self) -> usize {
        self.layers.len() - 1
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn alpha(&self) -> T {
        self.alpha
    }

    pub fn set_alpha(&mut self, alpha: T) {
        self.alpha = alpha;
    }

    pub fn activation(&self) -> &Activation {
        &self.activation
    }

    pub fn layers(&self) -> &[Layer<T>] {
        &self.layers
    }

    pub fn layers_mut(&mut self) -> &mut [Layer<T>] {
        &mut self.layers
    }

    pub fn max_abs_weight(&self) -> T {
        self.layers.iter().fold(T::zero(), |m, l| m.max(l.max_abs()))
    }

    /// Evaluates the network; the output unit is affine (no activation).
    pub fn forward(&self, x: &[T]) -> Result<T> {
        if x.len() != self.input_dim {
            return Err(Error::DimensionMismatch { expected: self.input_dim, got: x.len() });
        }
        Ok(self.forward_unchecked(x))
    }

    pub(crate) fn forward_unchecked(&self, x: &[T]) -> T {
        let mut h: Vec<T> = x.to_vec();
        let mut z = Vec::with_capacity(self.width);
        let (hidden, out) = self.layers.split_at(self.layers.len() - 1);
        for layer in hidden {
            layer.affine_into(&h, &mut z);
            h.clear();
            h.extend(z.iter().map(|&v| self.activation.eval(v)));
        }
        out[0].affine_into(&h, &mut z);
        z[0]
    }

    pub fn num_params(&self) -> usize {
        self.layers.iter().map(Layer::num_params).sum()
    }

    /// Flat parameter vector. Walk order: layer by layer, `W` row-major then `b`.
    pub fn params(&self) -> Vec<T> {
        let mut p = Vec::with_capacity(self.num_params());
        for layer in &self.layers {
            p.extend_from_slice(&layer.w);
            p.extend_from_slice(&layer.b);
        }
        p
    }

    pub fn set_params(&mut self, p: &[T]) -> Result<()> {
        if p.len() != self.num_params() {
            return Err(Error::DimensionMismatch { expected: self.num_params(), got: p.len() });
        }
        let mut off = 0;
        for layer in &mut self.layers {
            let nw = layer.w.len();
            layer.w.copy_from_slice(&p[off..off + nw]);
            off += nw;
            let nb = layer.b.len();
            layer.b.copy_from_slice(&p[off..off + nb]);
            off += nb;
        }
        Ok(())
    }

    /// Mutable references to every free scalar in walk order.
    pub fn params_mut(&mut self) -> impl Iterator<Item = &mut T> {
        self.layers
            .iter_mut()
            .flat_map(|l| l.w.iter_mut().chain(l.b.iter_mut()))
    }

    /// Clamps every weight into `[-alpha, alpha]`, records `alpha` as the
    /// network's bound, and returns how many weights were changed.
    pub fn project_weights(&mut self, alpha: T) -> usize {
        self.alpha = alpha;
        clamp_all(self.params_mut(), alpha)
    }

    /// Adds `upstream * ∂f(x)/∂θ` to `grad` (laid out in walk order) and
    /// returns `f(x)`.
    pub(crate) fn accumulate_gradient(&self, x: &[T], upstream: T, grad: &mut [T]) -> T {
        let n_hidden = self.layers.len() - 1;
        // hs[0] = x, hs[k] = output of hidden layer k.
        let mut hs: Vec<Vec<T>> = Vec::with_capacity(n_hidden + 1);
        hs.push(x.to_vec());
        let mut z = Vec::with_capacity(self.width);
        for layer in &self.layers[..n_hidden] {
            layer.affine_into(hs.last().unwrap(), &mut z);
            hs.push(z.iter().map(|&v| self.activation.eval(v)).collect());
        }
        let out_layer = &self.layers[n_hidden];
        out_layer.affine_into(&hs[n_hidden], &mut z);
        let f = z[0];

        let offsets = self.layer_offsets();
        let off = offsets[n_hidden];
        let h_last = &hs[n_hidden];
        for j in 0..self.width {
            grad[off + j] = grad[off + j] + upstream * h_last[j];
        }
        grad[off + self.width] = grad[off + self.width] + upstream;

        let one = T::one();
        let mut delta: Vec<T> = (0..self.width)
            .map(|j| upstream * out_layer.w[j] * h_last[j] * (one - h_last[j]))
            .collect();
        for k in (0..n_hidden).rev() {
            let layer = &self.layers[k];
            let h_in = &hs[k];
            let off = offsets[k];
            for (i, &di) in delta.iter().enumerate().take(layer.rows) {
                let row = off + i * layer.cols;
                for j in 0..layer.cols {
                    grad[row + j] = grad[row + j] + di * h_in[j];
                }
                let bi = off + layer.w.len() + i;
                grad[bi] = grad[bi] + di;
            }
            if k > 0 {
                let mut next = vec![T::zero(); layer.cols];
                for (i, &di) in delta.iter().enumerate().take(layer.rows) {
                    for (j, nj) in next.iter_mut().enumerate() {
                        *nj = *nj + layer.weight(i, j) * di;
                    }
                }
                for (nj, &h) in next.iter_mut().zip(h_in) {
                    *nj = *nj * h * (one - h);
                }
                delta = next;
            }
        }
        f
    }

    fn layer_offsets(&self) -> Vec<usize> {
        let mut offs = Vec::with_capacity(self.layers.len());
        let mut acc = 0;
        for l in &self.layers {
            offs.push(acc);
            acc += l.num_params();
        }
        offs
    }
}

impl<T: Scalar> DenseNetwork<T> {
    /// Converts every weight to another scalar type.
    pub fn cast<U: Scalar>(&self) -> DenseNetwork<U> {
        let conv = |v: &[T]| v.iter().map(|x| U::lit(x.as_f64())).collect::<Vec<U>>();
        DenseNetwork {
            input_dim: self.input_dim,
            width: self.width,
            alpha: U::lit(self.alpha.as_f64()),
            activation: self.activation,
            layers: self
                .layers
                .iter()
                .map(|l| Layer { rows: l.rows, cols: l.cols, w: conv(&l.w), b: conv(&l.b) })
                .collect(),
        }
    }
}

pub(crate) fn clamp_all<'a, T: Scalar>(it: impl Iterator<Item = &'a mut T>, alpha: T) -> usize {
    let mut count = 0;
    for v in it {
        if *v > alpha {
            *v = alpha;
            count += 1;
        } else if *v < -alpha {
            *v = -alpha;
            count += 1;
        }
    }
    count
}

fn check_arch(d: usize, l: usize, r: usize) -> Result<()> {
    if d == 0 || l == 0 || r == 0 {
        return invalid(format!("architecture (d={d}, L={l}, r={r}) must be positive"));
    }
    Ok(())
}

/// Number of free coefficients of a member of `F^(sparse)_{M*, L, r, α}` on
/// `R^d`, including the outer coefficients.
pub fn parameter_count(d: usize, l: usize, r: usize, m_star: usize) -> usize {
    m_star * ((d + 1) * r + (l - 1) * (r + 1) * r + (r + 1) + 1)
}
