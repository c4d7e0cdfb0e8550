use crate::error::{invalid, Error, Result};
use crate::scalar::Scalar;

/// Regression sample `(X_i, Y_i)`, one row per observation.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset<T = f64> {
    x: Vec<Vec<T>>,
    y: Vec<T>,
}

impl<T: Scalar> Dataset<T> {
    pub fn new(x: Vec<Vec<T>>, y: Vec<T>) -> Result<Self> {
        if x.is_empty() {
            return invalid("dataset needs at least one observation");
        }
        if x.len() != y.len() {
            return Err(Error::DimensionMismatch { expected: x.len(), got: y.len() });
        }
        let d = x[0].len();
        if d == 0 {
            return invalid("dataset needs at least one feature");
        }
        if let Some(row) = x.iter().find(|r| r.len() != d) {
            return Err(Error::DimensionMismatch { expected: d, got: row.len() });
        }
        if x.iter().flatten().chain(&y).any(|v| !v.is_finite()) {
            return invalid("dataset entries must be finite");
        }
        Ok(Self { x, y })
    }

    pub fn len(&self) -> usize {
        self.y.len()
    }

    pub fn is_empty(&self) -> bool {
        self.y.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.x[0].len()
    }

    pub fn x(&self) -> &[Vec<T>] {
        &self.x
    }

    pub fn y(&self) -> &[T] {
        &self.y
    }

    pub fn rows(&self) -> impl Iterator<Item = (&[T], T)> {
        self.x.iter().map(Vec::as_slice).zip(self.y.iter().copied())
    }

    /// Learning part (the first `⌈fraction · n⌉` rows) and testing part.
    pub fn split(&self, fraction: f64) -> Result<(Self, Self)> {
        if !(fraction > 0.0 && fraction < 1.0) {
            return invalid(format!("split fraction {fraction} must lie in (0, 1)"));
        }
        let n_learn = (fraction * self.len() as f64).ceil() as usize;
        if n_learn >= self.len() {
            return invalid(format!(
                "split fraction {fraction} leaves no test data out of {} rows",
                self.len()
            ));
        }
        let learn = Self { x: self.x[..n_learn].to_vec(), y: self.y[..n_learn].to_vec() };
        let test = Self { x: self.x[n_learn..].to_vec(), y: self.y[n_learn..].to_vec() };
        Ok((learn, test))
    }

    pub fn mean_y(&self) -> T {
        self.y.iter().copied().sum::<T>() / T::lit(self.len() as f64)
    }

    pub fn cast<U: Scalar>(&self) -> Dataset<U> {
        let c = |v: &T| U::lit(v.as_f64());
        Dataset {
            x: self.x.iter().map(|r| r.iter().map(c).collect()).collect(),
            y: self.y.iter().map(c).collect(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn validation() {
        assert!(Dataset::<f64>::new(vec![], vec![]).is_err());
        assert!(Dataset::new(vec![vec![1.0], vec![1.0, 2.0]], vec![0.0, 0.0]).is_err());
        assert!(Dataset::new(vec![vec![f64::NAN]], vec![0.0]).is_err());
        assert!(Dataset::new(vec![vec![1.0]], vec![0.0, 1.0]).is_err());
    }

    #[test]
    fn split_sizes() {
        let d = Dataset::new((0..10).map(|i| vec![i as f64]).collect(), vec![0.0; 10]).unwrap();
        let (l, t) = d.split(0.8).unwrap();
        assert_eq!((l.len(), t.len()), (8, 2));
        let (l, t) = d.split(0.5).unwrap();
        assert_eq!((l.len(), t.len()), (5, 5));
        assert!(d.split(0.95).is_err());
        assert!(d.split(1.0).is_err());
    }
}
