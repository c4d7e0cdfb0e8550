//! Fully connected and sparse additive sigmoidal networks.

mod activation;
mod dense;
mod serialize;
mod sparse;

pub use activation::{Activation, ActivationKind};
pub use dense::{parameter_count, DenseNetwork, Layer};
pub use serialize::{
    to_string_17, DenseDoc, LayerDoc, SeventeenDigits, SparseDoc, SubnetDoc, NETWORK_DOC_VERSION,
};
pub use sparse::SparseAdditiveNetwork;
