use chrono::{DateTime, Datelike, Timelike, Utc};

/// Number of calendar features: 24 hour-of-day one-hots + 7 day-of-week one-hots.
pub const CALENDAR_FEATURES: usize = 31;

/// One-hot calendar encoding of a UTC timestamp.
///
/// Indices 0..24 are the hour of day, 24..31 the day of week with Monday at
/// index 24. Exactly two entries are 1, all others 0.
pub fn calendar_features(ts: DateTime<Utc>) -> [f64; CALENDAR_FEATURES] {
    let mut out = [0.0; CALENDAR_FEATURES];
    out[ts.hour() as usize] = 1.0;
    out[24 + ts.weekday().num_days_from_monday() as usize] = 1.0;
    out
}
