use super::dense::{clamp_all, DenseNetwork};
use crate::error::{invalid, Error, Result};
use crate::scalar::Scalar;

/// `Σ μ_i f_i(x)` over `M*` fully connected subnetworks sharing `(d, L, r, α)`.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseAdditiveNetwork<T> {
    subnets: Vec<DenseNetwork<T>>,
    mu: Vec<T>,
    alpha: T,
}

impl<T: Scalar> SparseAdditiveNetwork<T> {
    pub fn new(subnets: Vec<DenseNetwork<T>>, mu: Vec<T>, alpha: T) -> Result<Self> {
        let Some(first) = subnets.first() else {
            return invalid("sparse network needs at least one subnetwork");
        };
        if mu.len() != subnets.len() {
            return Err(Error::DimensionMismatch { expected: subnets.len(), got: mu.len() });
        }
        let (d, l, r) = (first.input_dim(), first.hidden_layers(), first.width());
        if subnets
            .iter()
            .any(|s| s.input_dim() != d || s.hidden_layers() != l || s.width() != r)
        {
            return invalid("subnetworks must share input dimension, depth and width");
        }
        Ok(Self { subnets, mu, alpha })
    }

    /// `M*` zero subnetworks with zero outer coefficients.
    pub fn zeros(d: usize, l: usize, r: usize, m_star: usize, alpha: T) -> Result<Self> {
        let subnets = (0..m_star)
            .map(|_| DenseNetwork::zeros(d, l, r, alpha))
            .collect::<Result<Vec<_>>>()?;
        Self::new(subnets, vec![T::zero(); m_star], alpha)
    }

    pub fn subnets(&self) -> &[DenseNetwork<T>] {
        &self.subnets
    }

    pub fn subnets_mut(&mut self) -> &mut [DenseNetwork<T>] {
        &mut self.subnets
    }

    pub fn mu(&self) -> &[T] {
        &self.mu
    }

    pub fn mu_mut(&mut self) -> &mut [T] {
        &mut self.mu
    }

    pub fn m_star(&self) -> usize {
        self.subnets.len()
    }

    pub fn input_dim(&self) -> usize {
        self.subnets[0].input_dim()
    }

    pub fn hidden_layers(&self) -> usize {
        self.subnets[0].hidden_layers()
    }

    pub fn width(&self) -> usize {
        self.subnets[0].width()
    }

    pub fn alpha(&self) -> T {
        self.alpha
    }

    pub fn forward(&self, x: &[T]) -> Result<T> {
        if x.len() != self.input_dim() {
            return Err(Error::DimensionMismatch { expected: self.input_dim(), got: x.len() });
        }
        Ok(self.forward_unchecked(x))
    }

    pub(crate) fn forward_unchecked(&self, x: &[T]) -> T {
        self.subnets
            .iter()
            .zip(&self.mu)
            .fold(T::zero(), |acc, (net, &m)| acc + m * net.forward_unchecked(x))
    }

    pub fn num_params(&self) -> usize {
        self.subnets.iter().map(DenseNetwork::num_params).sum::<usize>() + self.mu.len()
    }

    /// Walk order: every subnetwork in turn (see [`DenseNetwork::params`]), then `μ`.
    pub fn params(&self) -> Vec<T> {
        let mut p = Vec::with_capacity(self.num_params());
        for s in &self.subnets {
            p.extend(s.params());
        }
        p.extend_from_slice(&self.mu);
        p
    }

    pub fn set_params(&mut self, p: &[T]) -> Result<()> {
        if p.len() != self.num_params() {
            return Err(Error::DimensionMismatch { expected: self.num_params(), got: p.len() });
        }
        let mut off = 0;
        for s in &mut self.subnets {
            let n = s.num_params();
            s.set_params(&p[off..off + n])?;
            off += n;
        }
        self.mu.copy_from_slice(&p[off..]);
        Ok(())
    }

    pub fn params_mut(&mut self) -> impl Iterator<Item = &mut T> {
        self.subnets
            .iter_mut()
            .flat_map(|s| s.params_mut())
            .chain(self.mu.iter_mut())
    }

    /// Clamps every subnetwork weight and every `μ_i` into `[-alpha, alpha]`.
    pub fn project_weights(&mut self, alpha: T) -> usize {
        self.alpha = alpha;
        for s in &mut self.subnets {
            s.set_alpha(alpha);
        }
        clamp_all(self.params_mut(), alpha)
    }

    pub(crate) fn accumulate_gradient(&self, x: &[T], upstream: T, grad: &mut [T]) -> T {
        let mut off = 0;
        let mu_off = self.num_params() - self.mu.len();
        let mut total = T::zero();
        for (i, (net, &m)) in self.subnets.iter().zip(&self.mu).enumerate() {
            let n = net.num_params();
            let fi = net.accumulate_gradient(x, upstream * m, &mut grad[off..off + n]);
            grad[mu_off + i] = grad[mu_off + i] + upstream * fi;
            total = total + m * fi;
            off += n;
        }
        total
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_net(rng: &mut ChaCha8Rng, d: usize) -> DenseNetwork<f64> {
        let mut net = DenseNetwork::zeros(d, 2, 3, 10.0).unwrap();
        for p in net.params_mut() {
            *p = rng.random_range(-1.0..1.0);
        }
        net
    }

    #[test]
    fn zero_coefficients_give_zero() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let nets = (0..3).map(|_| random_net(&mut rng, 2)).collect();
        let s = SparseAdditiveNetwork::new(nets, vec![0.0; 3], 10.0).unwrap();
        assert_eq!(s.forward(&[0.2, 0.9]).unwrap(), 0.0);
    }

    #[test]
    fn single_subnet_with_unit_coefficient() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let net = random_net(&mut rng, 2);
        let x = [0.4, -0.3];
        let expect = net.forward(&x).unwrap();
        let s = SparseAdditiveNetwork::new(vec![net], vec![1.0], 10.0).unwrap();
        assert_eq!(s.forward(&x).unwrap(), expect);
    }

    #[test]
    fn weighted_difference_of_two_subnets() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let f = random_net(&mut rng, 3);
        let g = random_net(&mut rng, 3);
        let x: Vec<f64> = (0..3).map(|_| rng.random_range(-1.0..1.0)).collect();
        let expect = 2.0 * f.forward(&x).unwrap() - g.forward(&x).unwrap();
        let s = SparseAdditiveNetwork::new(vec![f, g], vec![2.0, -1.0], 10.0).unwrap();
        assert!((s.forward(&x).unwrap() - expect).abs() < 1e-12);
    }

    #[test]
    fn empty_subnet_list_is_rejected() {
        assert!(SparseAdditiveNetwork::<f64>::new(vec![], vec![], 1.0).is_err());
    }

    #[test]
    fn projection_covers_outer_coefficients() {
        let mut s = SparseAdditiveNetwork::<f64>::zeros(2, 1, 2, 2, 1.0).unwrap();
        s.mu_mut()[1] = -3.0;
        assert_eq!(s.project_weights(1.0), 1);
        assert_eq!(s.mu()[1], -1.0);
    }
}
