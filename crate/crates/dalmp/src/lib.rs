//! Day-ahead locational marginal price (daLMP) forecasting toolkit.
//!
//! A hybrid recurrent+convolutional forecaster over hourly price data with
//! exogenous inputs, three classical benchmark models, evaluation metrics,
//! and a lognormal profit-risk calculus for run/shutdown decisions.

pub mod autodiff;
pub mod data;
pub mod net;
