//! Reverse-mode automatic differentiation over dense `f64` tensors.
//!
//! Graphs are rebuilt for every evaluation. Backward rules are expressed as
//! graph operations, which gives second-order derivatives (needed by the
//! critic's gradient penalty) without a separate code path.

mod check;
mod graph;
pub(crate) mod kernels;
mod tensor;

pub use check::{finite_difference_check, max_relative_error, numeric_gradient, relative_error};
pub use graph::{GradientMap, Graph, Var};
pub use tensor::Tensor;

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AutodiffError {
    #[error("{op}: shape mismatch between {lhs:?} and {rhs:?}")]
    ShapeMismatch {
        op: &'static str,
        lhs: Vec<usize>,
        rhs: Vec<usize>,
    },
    #[error("invalid shape {shape:?}: {reason}")]
    InvalidShape { shape: Vec<usize>, reason: String },
    #[error("{op}: domain error, {detail}")]
    Domain { op: &'static str, detail: String },
    #[error("expected a scalar, got shape {shape:?}")]
    NonScalar { shape: Vec<usize> },
    #[error("second-order tracking is not enabled on this graph")]
    SecondOrderDisabled,
    #[error("parameter `{0}` registered twice")]
    DuplicateParameter(String),
    #[error("finite-difference step must be positive, got {0}")]
    InvalidStep(f64),
}
