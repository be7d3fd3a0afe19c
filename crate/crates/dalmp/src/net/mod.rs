//! The two-branch day-ahead price forecaster.
//!
//! A recurrent block (LSTM over the past log-price window, then two dense
//! layers) runs in parallel with a convolutional block over the forecast
//! day's exogenous features; their outputs are concatenated per hour and a
//! width-1 convolution produces the 24 log-price forecasts, so each hour's
//! exogenous features influence that hour only.

mod adam;
mod config;
mod model;
mod train;
mod weights;

#[cfg(test)]
mod tests;

pub use adam::Adam;
pub use config::{NetworkConfig, TrainConfig};
pub use model::{forward, forward_graph, predict};
pub use train::{train, EarlyStopping, EpochStats, StopDecision, TrainOutcome};
pub use weights::{build_forecaster, ForecasterWeights};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum NetError {
    #[error("invalid network config: {0}")]
    InvalidConfig(String),
    #[error("invalid train config: {0}")]
    InvalidTrainConfig(String),
    #[error("input {name} has shape {got:?}, expected {expected:?}")]
    InputShape {
        name: &'static str,
        got: Vec<usize>,
        expected: Vec<usize>,
    },
    #[error("weight tensor {name} has shape {got:?}, expected {expected:?}")]
    WeightShape {
        name: String,
        got: Vec<usize>,
        expected: Vec<usize>,
    },
    #[error("training needs at least 2 examples, got {0}")]
    EmptyDataset(usize),
    #[error("example {index} has z/x/y lengths {z}/{x}/{y}, expected {ez}/{ex}/{ey}")]
    ExampleShape {
        index: usize,
        z: usize,
        x: usize,
        y: usize,
        ez: usize,
        ex: usize,
        ey: usize,
    },
    #[error("training diverged: {context} became non-finite at epoch {epoch}")]
    Divergence { epoch: usize, context: &'static str },
    #[error(transparent)]
    Autodiff(#[from] crate::autodiff::AutodiffError),
}
