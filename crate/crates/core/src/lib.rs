//! Sparse additive sigmoid networks for nonparametric regression.

// `!(x > 0.0)` is used on purpose so that NaN is rejected alongside out-of-range values.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::too_many_arguments)]

pub mod baselines;
pub mod constructive;
pub mod error;
pub mod fit;
pub mod harness;
pub mod net;
pub mod oracle;
pub mod scalar;

pub use error::{Error, Result};
pub use scalar::Scalar;

pub type DenseNetworkF32 = net::DenseNetwork<f32>;
pub type DenseNetworkF64 = net::DenseNetwork<f64>;
pub type SparseAdditiveNetworkF32 = net::SparseAdditiveNetwork<f32>;
pub type SparseAdditiveNetworkF64 = net::SparseAdditiveNetwork<f64>;
pub type DatasetF32 = fit::Dataset<f32>;
pub type DatasetF64 = fit::Dataset<f64>;
