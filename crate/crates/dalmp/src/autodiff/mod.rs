//! Minimal dense-tensor reverse-mode automatic differentiation.
//!
//! Provides exactly the primitives the price forecaster needs: elementwise
//! arithmetic, matrix product, bias broadcast, ReLU/sigmoid/tanh/abs,
//! reductions, same-padded 1D convolution, last-axis concat/slice, and
//! reshape. Everything is f64; the networks here are small enough that
//! correctness wins over speed.

mod check;
mod graph;
mod tensor;

pub use check::{
    central_difference, grad_check, grad_check_with_step, relative_error, reverse_gradient,
    GradCheckReport, LossBuilder, FD_STEP,
};
pub use graph::{Graph, NodeId, Primitive};
pub use tensor::Tensor;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum AutodiffError {
    #[error("{op}: shape mismatch between {lhs:?} and {rhs:?}")]
    ShapeMismatch {
        op: &'static str,
        lhs: Vec<usize>,
        rhs: Vec<usize>,
    },
    #[error("{op}: expected {expected} inputs, got {got}")]
    Arity {
        op: &'static str,
        expected: usize,
        got: usize,
    },
    #[error("slice [{start}, {start}+{len}) out of bounds for axis of length {axis_len}")]
    InvalidSlice {
        start: usize,
        len: usize,
        axis_len: usize,
    },
    #[error("tensor data length {len} does not match shape {shape:?}")]
    DataLength { shape: Vec<usize>, len: usize },
    #[error("tensor rank {rank} is unsupported (must be 1 to 3)")]
    RankUnsupported { rank: usize },
    #[error("tensor shape {shape:?} has a zero dimension")]
    ZeroDimension { shape: Vec<usize> },
    #[error("backward requires a scalar loss, got shape {shape:?}")]
    NonScalarLoss { shape: Vec<usize> },
    #[error("gradient-check builder is not deterministic: {first} vs {second} at identical parameters")]
    NonDeterministicBuilder { first: f64, second: f64 },
    #[error("gradient check declared {declared} parameters but the builder registered {found}")]
    ParamCount { declared: usize, found: usize },
}
