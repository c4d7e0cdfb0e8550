//! Exact evaluation of splines, basis functions, polytopes and regression targets.

mod basis;
mod knots;
mod polytope;
mod targets;
mod tensor;

pub use basis::{basis_eval, GeneralizedBasisFunction, HingeFactor, SplineFactor};
pub use knots::{bspline_eval, KnotSequence};
pub use polytope::{
    hinge_squeeze, polytope_squeeze_expand, Halfspace, Polytope, MAX_EXPAND_FACETS,
};
pub use targets::{target_eval, LocalDimTarget, Piece, Target, TargetName, COT_EPS, FIG2_DELTA};
pub use tensor::{tensor_bspline_approx, TensorSplineFit};
