//! Networks that emulate identities, products, hinges, B-splines and
//! generalized basis functions, each paired with a computable error bound.

mod builder;
mod primitives;
mod product;
mod spline_net;
mod verify;

pub use primitives::{
    build_identity, build_mult, build_relu, build_square, build_trunc, fp_slack, BoundedApproxNet,
    Constants, WeightConstants, FP_SLACK_KAPPA,
};
pub use product::{
    build_basis_net, build_lcb_net, build_product_net, BoundedSparseNet, ProductFactor,
    DEFAULT_R_CAP,
};
pub use spline_net::{bspline_class_width, build_bspline_net, build_bspline_net_on};
pub use verify::{verify_lemma, LemmaName, LemmaReport};
