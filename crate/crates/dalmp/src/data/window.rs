//! Windowing hourly data into supervised training examples.

use chrono::{DateTime, Timelike, Utc};

use super::calendar::{calendar_features, CALENDAR_FEATURES};
use super::series::{ExogenousFrame, HourlySeries};
use super::DataError;
use crate::net::NetworkConfig;

/// One supervised example: past log-price window, future exogenous block,
/// and future log-price targets.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainingExample {
    /// `n_z` log prices, chronological, ending one hour before `origin`.
    pub z: Vec<f64>,
    /// `n_x * x_f` exogenous features for the target day, hour-major.
    pub x: Vec<f64>,
    /// `n_x` target log prices covering the target day.
    pub y: Vec<f64>,
    /// First target hour (start of the forecast day).
    pub origin: DateTime<Utc>,
}

/// Per-column standardization fitted on training rows only.
///
/// Physical exogenous columns are z-scored; a zero-variance column maps to
/// zero. Calendar one-hots pass through untouched so that exactly one entry
/// per group stays set.
#[derive(Debug, Clone, PartialEq)]
pub struct ExoScaler {
    pub means: Vec<f64>,
    pub stds: Vec<f64>,
}

const STD_FLOOR: f64 = 1e-12;

impl ExoScaler {
    fn fit(exo: &ExogenousFrame, rows: usize) -> Self {
        let mut means = Vec::with_capacity(exo.ncols());
        let mut stds = Vec::with_capacity(exo.ncols());
        for c in 0..exo.ncols() {
            let col = &exo.column(c)[..rows];
            let n = col.len().max(1) as f64;
            let mean = col.iter().sum::<f64>() / n;
            let var = col.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
            means.push(mean);
            stds.push(var.sqrt());
        }
        ExoScaler { means, stds }
    }

    /// Standardizes one raw value from column `col`.
    pub fn apply(&self, col: usize, value: f64) -> f64 {
        let std = self.stds[col];
        if std <= STD_FLOOR {
            0.0
        } else {
            (value - self.means[col]) / std
        }
    }

    pub fn ncols(&self) -> usize {
        self.means.len()
    }
}

/// Output of [`build_examples`]: chronologically ordered examples, the
/// train/validation split point, and the scaler fitted on the training rows.
#[derive(Debug, Clone)]
pub struct ExampleSet {
    pub examples: Vec<TrainingExample>,
    /// Examples `[0, split_at)` are training, `[split_at, ..)` validation.
    pub split_at: usize,
    pub scaler: ExoScaler,
}

/// Feature rows (standardized exogenous columns + calendar one-hots) for
/// every hour of a frame, hour-major.
pub fn feature_rows(exo: &ExogenousFrame, scaler: &ExoScaler) -> Result<Vec<f64>, DataError> {
    if exo.ncols() != scaler.ncols() {
        return Err(DataError::FeatureCount {
            expected: scaler.ncols(),
            found: exo.ncols(),
        });
    }
    let width = exo.ncols() + CALENDAR_FEATURES;
    let mut out = Vec::with_capacity(exo.len() * width);
    for i in 0..exo.len() {
        for c in 0..exo.ncols() {
            out.push(scaler.apply(c, exo.column(c)[i]));
        }
        out.extend_from_slice(&calendar_features(exo.timestamp_at(i)));
    }
    Ok(out)
}

/// Windows a price series and aligned exogenous frame into one example per
/// calendar day that has a full `n_z`-hour history.
///
/// The target day's hours form `y` and the exogenous block `X`; `Z` is the
/// `n_z` log prices ending at the last hour before the target day.
/// Consecutive example origins are exactly 24 hours apart. Exogenous
/// standardization statistics come from the hours strictly before the first
/// validation example's target day and are then applied to all examples.
pub fn build_examples(
    prices: &HourlySeries,
    exo: &ExogenousFrame,
    config: &NetworkConfig,
    validation_fraction: f64,
) -> Result<ExampleSet, DataError> {
    if prices.start() != exo.start() || prices.len() != exo.len() {
        return Err(DataError::Misalignment {
            reason: format!(
                "prices start {} len {}, exogenous start {} len {}",
                prices.start(),
                prices.len(),
                exo.start(),
                exo.len()
            ),
        });
    }
    let expected_features = exo.ncols() + CALENDAR_FEATURES;
    if config.exogenous_features != expected_features {
        return Err(DataError::FeatureCount {
            expected: config.exogenous_features,
            found: expected_features,
        });
    }
    if !(0.0 < validation_fraction && validation_fraction < 0.5) {
        return Err(DataError::BadValidationFraction(validation_fraction));
    }
    let n_z = config.endogenous_hours;
    let n_x = config.horizon_hours;
    let needed = n_z + n_x;
    if prices.len() < needed {
        return Err(DataError::InsufficientHistory {
            needed,
            available: prices.len(),
        });
    }

    let log_prices = prices.log_transform()?;
    let logv = log_prices.values();

    // Candidate target-day starts: midnight hours with full history before
    // and a complete day after.
    let mut origins = Vec::new();
    let mut h = n_z;
    // Advance to the first midnight at or after n_z.
    let start_hour = prices.timestamp_at(0).hour() as usize;
    let rem = (start_hour + h) % 24;
    if rem != 0 {
        h += 24 - rem;
    }
    while h + n_x <= prices.len() {
        origins.push(h);
        h += 24;
    }
    if origins.is_empty() {
        return Err(DataError::InsufficientHistory {
            needed,
            available: prices.len(),
        });
    }

    let n_examples = origins.len();
    let split_at = if n_examples == 1 {
        1
    } else {
        let n_val = ((validation_fraction * n_examples as f64).round() as usize)
            .clamp(1, n_examples - 1);
        n_examples - n_val
    };
    // Training region: everything strictly before the first validation target.
    let boundary = if split_at < n_examples {
        origins[split_at]
    } else {
        prices.len()
    };
    let scaler = ExoScaler::fit(exo, boundary);

    let mut examples = Vec::with_capacity(n_examples);
    for &o in &origins {
        let z = logv[o - n_z..o].to_vec();
        let y = logv[o..o + n_x].to_vec();
        let mut x = Vec::with_capacity(n_x * config.exogenous_features);
        for i in o..o + n_x {
            for c in 0..exo.ncols() {
                x.push(scaler.apply(c, exo.column(c)[i]));
            }
            x.extend_from_slice(&calendar_features(exo.timestamp_at(i)));
        }
        examples.push(TrainingExample {
            z,
            x,
            y,
            origin: prices.timestamp_at(o),
        });
    }
    Ok(ExampleSet {
        examples,
        split_at,
        scaler,
    })
}
