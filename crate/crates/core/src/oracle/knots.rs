use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::scalar::Scalar;

/// Strictly increasing knots `t_{-M} < … < t_{K+M}` indexed from `-M`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(
    try_from = "RawKnots<T>",
    bound(deserialize = "T: Scalar + Deserialize<'de>")
)]
pub struct KnotSequence<T> {
    values: Vec<T>,
    degree: usize,
    min_gap: T,
}

#[derive(Deserialize)]
struct RawKnots<T> {
    values: Vec<T>,
    degree: usize,
    min_gap: Option<T>,
}

impl<T: Scalar> TryFrom<RawKnots<T>> for KnotSequence<T> {
    type Error = crate::error::Error;

    fn try_from(raw: RawKnots<T>) -> Result<Self> {
        match raw.min_gap {
            Some(g) => Self::with_min_gap(raw.values, raw.degree, g),
            None => Self::new(raw.values, raw.degree),
        }
    }
}

impl<T: Scalar> KnotSequence<T> {
    /// `degree` fixes the index offset: `values[0]` is `t_{-degree}`.
    pub fn new(values: Vec<T>, degree: usize) -> Result<Self> {
        if values.len() < degree + 2 {
            return invalid(format!(
                "degree {degree} needs at least {} knots, got {}",
                degree + 2,
                values.len()
            ));
        }
        let mut min_gap = T::infinity();
        for w in values.windows(2) {
            let gap = w[1] - w[0];
            if !(gap > T::zero()) {
                return invalid("knots must be strictly increasing");
            }
            min_gap = min_gap.min(gap);
        }
        Ok(Self { values, degree, min_gap })
    }

    /// Like [`KnotSequence::new`] but additionally requires every gap to be at least `min_gap`.
    pub fn with_min_gap(values: Vec<T>, degree: usize, min_gap: T) -> Result<Self> {
        let ks = Self::new(values, degree)?;
        if ks.min_gap < min_gap * (T::one() - T::lit(1e-12)) {
            return invalid(format!("knot gap {} is below the required {}", ks.min_gap, min_gap));
        }
        Ok(Self { min_gap, ..ks })
    }

    /// `count` equally spaced knots starting at `start`.
    pub fn uniform(start: T, spacing: T, count: usize, degree: usize) -> Result<Self> {
        let values = (0..count).map(|k| start + spacing * T::lit(k as f64)).collect();
        Self::new(values, degree)
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    pub fn min_gap(&self) -> T {
        self.min_gap
    }

    pub fn first_index(&self) -> isize {
        -(self.degree as isize)
    }

    pub fn last_index(&self) -> isize {
        self.values.len() as isize - self.degree as isize - 1
    }

    /// `t_k`.
    pub fn t(&self, k: isize) -> T {
        self.values[(k + self.degree as isize) as usize]
    }

    /// Valid spline indices `j` for degree `l`: `B_{j,l}` needs `t_j … t_{j+l+1}`.
    pub fn spline_indices(&self, l: usize) -> std::ops::RangeInclusive<isize> {
        self.first_index()..=(self.last_index() - l as isize - 1)
    }

    /// Closed interior span `[t_0, t_{K}]` on which the degree-`M` splines
    /// `j = -M..K-1` form a partition of unity.
    pub fn interior_span(&self) -> (T, T) {
        (self.t(0), self.t(self.last_index() - self.degree as isize))
    }
}

/// `B_{j,l,t}(x)` by the Cox–de Boor recursion. Degree-0 pieces are the
/// half-open indicators `[t_i, t_{i+1})`, except that the interval ending at
/// the last knot is closed on the right.
pub fn bspline_eval<T: Scalar>(ks: &KnotSequence<T>, j: isize, l: usize, x: T) -> Result<T> {
    let range = ks.spline_indices(l);
    if !range.contains(&j) {
        return invalid(format!(
            "spline index {j} out of range {}..={} for degree {l}",
            range.start(),
            range.end()
        ));
    }
    let last = ks.last_index();
    // level-0 values for intervals j..=j+l
    let mut b: Vec<T> = (0..=l as isize)
        .map(|i| {
            let lo = ks.t(j + i);
            let hi = ks.t(j + i + 1);
            let inside = (lo <= x && x < hi) || (j + i + 1 == last && x == hi);
            if inside { T::one() } else { T::zero() }
        })
        .collect();
    for deg in 1..=l {
        for i in 0..=(l - deg) {
            let jj = j + i as isize;
            let left = (x - ks.t(jj)) / (ks.t(jj + deg as isize) - ks.t(jj));
            let right = (ks.t(jj + deg as isize + 1) - x)
                / (ks.t(jj + deg as isize + 1) - ks.t(jj + 1));
            b[i] = left * b[i] + right * b[i + 1];
        }
    }
    Ok(b[0])
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cardinal(n: usize, degree: usize) -> KnotSequence<f64> {
        KnotSequence::uniform(0.0, 1.0, n, degree).unwrap()
    }

    #[test]
    fn degree_zero_is_half_open() {
        let ks = cardinal(4, 0);
        assert_eq!(bspline_eval(&ks, 1, 0, 1.0).unwrap(), 1.0);
        assert_eq!(bspline_eval(&ks, 1, 0, 2.0).unwrap(), 0.0);
    }

    #[test]
    fn last_interval_is_closed() {
        let ks = cardinal(3, 0);
        assert_eq!(bspline_eval(&ks, 1, 0, 2.0).unwrap(), 1.0);
    }

    #[test]
    fn hat_function() {
        let ks = cardinal(3, 1);
        assert_eq!(bspline_eval(&ks, -1, 1, 1.0).unwrap(), 1.0);
        assert_eq!(bspline_eval(&ks, -1, 1, 0.5).unwrap(), 0.5);
    }

    #[test]
    fn quadratic_midpoint() {
        let ks = cardinal(4, 2);
        assert!((bspline_eval(&ks, -2, 2, 1.5).unwrap() - 0.75).abs() < 1e-15);
    }

    #[test]
    fn index_out_of_range() {
        let ks = cardinal(4, 2);
        assert!(bspline_eval(&ks, -3, 2, 0.5).is_err());
        assert!(bspline_eval(&ks, -1, 2, 0.5).is_err());
    }

    #[test]
    fn gap_requirement() {
        assert!(KnotSequence::with_min_gap(vec![0.0, 0.25, 0.4], 0, 0.25).is_err());
        assert!(KnotSequence::with_min_gap(vec![0.0, 0.25, 0.5], 0, 0.25).is_ok());
        assert!(KnotSequence::new(vec![0.0, 0.0, 1.0], 0).is_err());
    }
}
