use chrono::{DateTime, Duration, Timelike, Utc};

use super::DataError;

/// A contiguous hourly series: one value per hour starting at `start`.
#[derive(Debug, Clone, PartialEq)]
pub struct HourlySeries {
    start: DateTime<Utc>,
    values: Vec<f64>,
}

impl HourlySeries {
    /// `start` must sit on an hour boundary; the values are taken to be the
    /// strictly consecutive hours from there (the ingestion path is what
    /// establishes that there are no gaps or duplicates).
    pub fn new(start: DateTime<Utc>, values: Vec<f64>) -> Result<Self, DataError> {
        if start.minute() != 0 || start.second() != 0 || start.nanosecond() != 0 {
            return Err(DataError::Misaligned { ts: start });
        }
        Ok(HourlySeries { start, values })
    }

    pub fn start(&self) -> DateTime<Utc> {
        self.start
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn timestamp_at(&self, index: usize) -> DateTime<Utc> {
        self.start + Duration::hours(index as i64)
    }

    /// Natural log of every value. Errors on any non-positive value.
    pub fn log_transform(&self) -> Result<HourlySeries, DataError> {
        if let Some(&bad) = self.values.iter().find(|&&v| v <= 0.0) {
            return Err(DataError::LogDomain { value: bad });
        }
        Ok(HourlySeries {
            start: self.start,
            values: self.values.iter().map(|v| v.ln()).collect(),
        })
    }

    /// Elementwise exp; inverse of [`HourlySeries::log_transform`].
    pub fn inverse_log(&self) -> HourlySeries {
        HourlySeries {
            start: self.start,
            values: self.values.iter().map(|v| v.exp()).collect(),
        }
    }
}

/// Hour-aligned named exogenous columns, all the same length.
///
/// Column order is fixed at construction and is the feature order every
/// consumer sees; it must match between training and prediction.
#[derive(Debug, Clone, PartialEq)]
pub struct ExogenousFrame {
    start: DateTime<Utc>,
    columns: Vec<(String, Vec<f64>)>,
}

impl ExogenousFrame {
    pub fn new(
        start: DateTime<Utc>,
        columns: Vec<(String, Vec<f64>)>,
    ) -> Result<Self, DataError> {
        if start.minute() != 0 || start.second() != 0 || start.nanosecond() != 0 {
            return Err(DataError::Misaligned { ts: start });
        }
        if let Some(first) = columns.first() {
            let len = first.1.len();
            if let Some((name, col)) = columns.iter().find(|(_, c)| c.len() != len) {
                return Err(DataError::RaggedColumns(format!(
                    "column {name} has {} rows, expected {len}",
                    col.len()
                )));
            }
        }
        Ok(ExogenousFrame { start, columns })
    }

    pub fn start(&self) -> DateTime<Utc> {
        self.start
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.columns.iter().map(|(n, _)| n.as_str())
    }

    pub fn ncols(&self) -> usize {
        self.columns.len()
    }

    pub fn len(&self) -> usize {
        self.columns.first().map_or(0, |(_, c)| c.len())
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn column(&self, index: usize) -> &[f64] {
        &self.columns[index].1
    }

    pub fn timestamp_at(&self, index: usize) -> DateTime<Utc> {
        self.start + Duration::hours(index as i64)
    }
}
