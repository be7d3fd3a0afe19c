//! Hourly market data: ingestion, validation, transforms, and windowing.

mod calendar;
mod csv_io;
mod series;
mod window;

pub use calendar::{calendar_features, CALENDAR_FEATURES};
pub use csv_io::{
    ingest_csv, ingest_exogenous_csv, read_forecast_csv, write_forecast_csv, write_market_csv,
    EXOGENOUS_COLUMNS, MARKET_CSV_HEADER,
};
pub use series::{ExogenousFrame, HourlySeries};
pub use window::{build_examples, feature_rows, ExampleSet, ExoScaler, TrainingExample};

use chrono::{DateTime, Utc};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum DataError {
    #[error("io error reading {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("csv error in {path}: {source}")]
    Csv { path: String, source: csv::Error },
    #[error("unexpected header: expected columns `{expected}`, found `{found}`")]
    Header { expected: String, found: String },
    #[error("row {row}: cannot parse timestamp `{value}` (expected YYYY-MM-DDTHH:00:00Z)")]
    Timestamp { row: usize, value: String },
    #[error("timestamp {ts} is not aligned to an hour boundary")]
    Misaligned { ts: DateTime<Utc> },
    #[error("duplicate timestamp {ts}")]
    DuplicateTimestamp { ts: DateTime<Utc> },
    #[error("{} missing hour(s) in series, first {:?}", missing.len(), missing.iter().take(5).collect::<Vec<_>>())]
    Gap { missing: Vec<DateTime<Utc>> },
    #[error("non-positive price {value} at {ts}; prices must be strictly positive")]
    NonPositivePrice { ts: DateTime<Utc>, value: f64 },
    #[error("negative demand {value} in column {column} at {ts}")]
    NegativeDemand {
        column: String,
        ts: DateTime<Utc>,
        value: f64,
    },
    #[error("row {row}, column {column}: cannot parse float `{value}`")]
    BadFloat {
        row: usize,
        column: String,
        value: String,
    },
    #[error("file {path} is empty")]
    Empty { path: String },
    #[error("log transform requires strictly positive values, got {value}")]
    LogDomain { value: f64 },
    #[error("series of length {available} is too short: {needed} hours needed for one example window")]
    InsufficientHistory { needed: usize, available: usize },
    #[error("price series and exogenous frame are misaligned: {reason}")]
    Misalignment { reason: String },
    #[error("columns have inconsistent lengths: {0}")]
    RaggedColumns(String),
    #[error("exogenous frame provides {found} features per hour but the network expects {expected}")]
    FeatureCount { expected: usize, found: usize },
    #[error("validation fraction {0} must lie strictly between 0 and 0.5")]
    BadValidationFraction(f64),
}
