use serde::{Deserialize, Serialize};

use super::basis::{GeneralizedBasisFunction, HingeFactor};
use crate::error::{invalid, Error, Result};
use crate::scalar::Scalar;

/// Largest facet count [`Polytope::squeeze_expand`] will expand.
pub const MAX_EXPAND_FACETS: usize = 20;

/// `{x : aᵀx ≤ b}` with a transition width `delta`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Halfspace<T> {
    pub a: Vec<T>,
    pub b: T,
    pub delta: T,
}

impl<T: Scalar> Halfspace<T> {
    pub fn new(a: Vec<T>, b: T, delta: T) -> Result<Self> {
        let norm = a.iter().map(|&v| v * v).sum::<T>().sqrt();
        if norm > T::one() + T::lit(1e-12) {
            return invalid(format!("halfspace normal has norm {norm} > 1"));
        }
        if !(delta > T::zero()) {
            return invalid("halfspace delta must be positive");
        }
        Ok(Self { a, b, delta })
    }

    pub fn dot(&self, x: &[T]) -> T {
        self.a.iter().zip(x).map(|(&a, &v)| a * v).sum()
    }

    /// `aᵀx ≤ b − δ`.
    pub fn contains_inner(&self, x: &[T]) -> bool {
        self.dot(x) <= self.b - self.delta
    }

    pub fn contains(&self, x: &[T]) -> bool {
        self.dot(x) <= self.b
    }

    /// `aᵀx ≤ b + δ`.
    pub fn contains_outer(&self, x: &[T]) -> bool {
        self.dot(x) <= self.b + self.delta
    }

    /// The two hinges `u = ((−aᵀx + b + δ)/δ)₊` and `v = ((−aᵀx + b)/δ)₊`
    /// as axis-sum hinge factors. The constant is carried by the offset of
    /// the coordinate with the largest `|a_j|`.
    fn hinge_pair(&self) -> Result<(HingeFactor<T>, HingeFactor<T>)> {
        let (pivot, amax) = self
            .a
            .iter()
            .enumerate()
            .fold((0, T::zero()), |(i, m), (j, &v)| if v.abs() > m { (j, v.abs()) } else { (i, m) });
        if amax == T::zero() {
            return invalid("cannot expand a halfspace with zero normal");
        }
        let alpha: Vec<T> = self.a.iter().map(|&v| -v / self.delta).collect();
        let ap = self.a[pivot];
        let make = |c: T| {
            let mut gamma = vec![T::zero(); self.a.len()];
            gamma[pivot] = c / ap;
            HingeFactor::dense(alpha.clone(), gamma)
        };
        Ok((make(self.b + self.delta)?, make(self.b)?))
    }
}

/// The ramp that is 1 on `{aᵀx ≤ b}`, 0 beyond `b + δ`, and linear between.
pub fn hinge_squeeze<T: Scalar>(h: &Halfspace<T>, x: &[T]) -> T {
    let s = h.b - h.dot(x);
    ((s + h.delta) / h.delta).max(T::zero()) - (s / h.delta).max(T::zero())
}

/// Intersection of halfspaces.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Polytope<T> {
    pub halfspaces: Vec<Halfspace<T>>,
}

impl<T: Scalar> Polytope<T> {
    pub fn new(halfspaces: Vec<Halfspace<T>>) -> Result<Self> {
        if let Some(d) = halfspaces.first().map(|h| h.a.len()) {
            if let Some(bad) = halfspaces.iter().find(|h| h.a.len() != d) {
                return Err(Error::DimensionMismatch { expected: d, got: bad.a.len() });
            }
        }
        Ok(Self { halfspaces })
    }

    /// Axis-aligned box `Π [lo_j, hi_j]` with a common transition width.
    pub fn axis_box(lo: &[T], hi: &[T], delta: T) -> Result<Self> {
        if lo.len() != hi.len() {
            return Err(Error::DimensionMismatch { expected: lo.len(), got: hi.len() });
        }
        let d = lo.len();
        let mut hs = Vec::with_capacity(2 * d);
        for j in 0..d {
            let mut a = vec![T::zero(); d];
            a[j] = T::one();
            hs.push(Halfspace::new(a.clone(), hi[j], delta)?);
            a[j] = -T::one();
            hs.push(Halfspace::new(a, -lo[j], delta)?);
        }
        Self::new(hs)
    }

    pub fn facets(&self) -> usize {
        self.halfspaces.len()
    }

    /// `x ∈ P_δ`.
    pub fn contains_inner(&self, x: &[T]) -> bool {
        self.halfspaces.iter().all(|h| h.contains_inner(x))
    }

    pub fn contains(&self, x: &[T]) -> bool {
        self.halfspaces.iter().all(|h| h.contains(x))
    }

    /// `x ∈ P^δ`.
    pub fn contains_outer(&self, x: &[T]) -> bool {
        self.halfspaces.iter().all(|h| h.contains_outer(x))
    }

    /// `Π_i h_i(x)`.
    pub fn squeeze(&self, x: &[T]) -> T {
        self.halfspaces.iter().map(|h| hinge_squeeze(h, x)).fold(T::one(), |a, b| a * b)
    }

    /// Multiplies out `Π_i (u_i − v_i)` into `2^K` hinge products. Term `s`
    /// takes `v_i` for every bit `i` set in `s` and carries sign `(−1)^{|s|}`.
    pub fn squeeze_expand(&self) -> Result<(Vec<GeneralizedBasisFunction<T>>, Vec<T>)> {
        let k = self.facets();
        if k == 0 {
            return invalid("polytope has no facets to expand");
        }
        if k > MAX_EXPAND_FACETS {
            return invalid(format!(
                "refusing to expand {k} facets (limit {MAX_EXPAND_FACETS})"
            ));
        }
        let pairs = self
            .halfspaces
            .iter()
            .map(Halfspace::hinge_pair)
            .collect::<Result<Vec<_>>>()?;
        let mut bases = Vec::with_capacity(1 << k);
        let mut coeffs = Vec::with_capacity(1 << k);
        for s in 0u32..(1u32 << k) {
            let hinges = pairs
                .iter()
                .enumerate()
                .map(|(i, (u, v))| if s >> i & 1 == 1 { v.clone() } else { u.clone() })
                .collect();
            bases.push(GeneralizedBasisFunction { splines: vec![], hinges });
            coeffs.push(if s.count_ones() % 2 == 0 { T::one() } else { -T::one() });
        }
        Ok((bases, coeffs))
    }
}

/// Free-function form of [`Polytope::squeeze_expand`].
pub fn polytope_squeeze_expand<T: Scalar>(
    p: &Polytope<T>,
) -> Result<(Vec<GeneralizedBasisFunction<T>>, Vec<T>)> {
    p.squeeze_expand()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn h() -> Halfspace<f64> {
        Halfspace::new(vec![1.0, 0.0], 0.0, 0.1).unwrap()
    }

    #[test]
    fn ramp_values() {
        assert!((hinge_squeeze(&h(), &[-0.5, 3.0]) - 1.0).abs() < 1e-12);
        assert_eq!(hinge_squeeze(&h(), &[0.2, 3.0]), 0.0);
        assert!((hinge_squeeze(&h(), &[0.05, 3.0]) - 0.5).abs() < 1e-12);
    }

    #[test]
    fn long_normal_rejected() {
        assert!(Halfspace::new(vec![1.0, 1.0], 0.0, 0.1).is_err());
        assert!(Halfspace::new(vec![1.0], 0.0, 0.0).is_err());
    }

    #[test]
    fn single_facet_expansion() {
        let p = Polytope::new(vec![h()]).unwrap();
        let (bases, coeffs) = p.squeeze_expand().unwrap();
        assert_eq!(bases.len(), 2);
        assert_eq!(coeffs, vec![1.0, -1.0]);
        for x in [-0.5, 0.0, 0.03, 0.07, 0.2] {
            let pt = [x, 1.0];
            let sum: f64 = bases.iter().zip(&coeffs).map(|(b, c)| c * b.eval(&pt).unwrap()).sum();
            assert!((sum - p.squeeze(&pt)).abs() < 1e-12);
        }
    }

    #[test]
    fn two_facet_expansion_matches_product() {
        let s = 0.6f64.sqrt();
        let p = Polytope::new(vec![
            Halfspace::new(vec![0.8, 0.6], 0.5, 0.2).unwrap(),
            Halfspace::new(vec![-s, 0.4], 0.1, 0.05).unwrap(),
        ])
        .unwrap();
        let (bases, coeffs) = p.squeeze_expand().unwrap();
        assert_eq!(bases.len(), 4);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..1000 {
            let x = [rng.random_range(-2.0..2.0), rng.random_range(-2.0..2.0)];
            let sum: f64 = bases.iter().zip(&coeffs).map(|(b, c)| c * b.eval(&x).unwrap()).sum();
            assert!((sum - p.squeeze(&x)).abs() < 1e-12);
        }
    }

    #[test]
    fn deep_inside_is_one() {
        let p = Polytope::axis_box(&[-1.0, -1.0], &[1.0, 1.0], 0.1).unwrap();
        let (bases, coeffs) = p.squeeze_expand().unwrap();
        let x = [0.2, -0.3];
        let sum: f64 = bases.iter().zip(&coeffs).map(|(b, c)| c * b.eval(&x).unwrap()).sum();
        assert!((sum - 1.0).abs() < 1e-12);
    }

    #[test]
    fn too_many_facets_refused() {
        let hs = (0..21).map(|_| h()).collect();
        let p = Polytope::new(hs).unwrap();
        assert!(p.squeeze_expand().is_err());
        assert!(Polytope::<f64>::new(vec![]).unwrap().squeeze_expand().is_err());
    }

    #[test]
    fn membership_nesting() {
        let p = Polytope::axis_box(&[0.0], &[1.0], 0.1).unwrap();
        assert!(p.contains_inner(&[0.5]) && p.contains(&[0.5]));
        assert!(!p.contains_inner(&[0.95]) && p.contains(&[0.95]));
        assert!(!p.contains(&[1.05]) && p.contains_outer(&[1.05]));
        assert!(!p.contains_outer(&[1.2]));
    }
}
