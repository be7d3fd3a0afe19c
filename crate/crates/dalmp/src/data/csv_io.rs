//! The on-disk CSV contract for hourly market data.
//!
//! Market files carry the header
//! `timestamp,dalmp,rto_demand_mw,...,pittsburgh_f` with timestamps in
//! `YYYY-MM-DDTHH:00:00Z` form (UTC, hour-aligned), plain decimal floats,
//! UTF-8, no thousands separators. Rows may arrive unsorted; ingestion
//! sorts them and then demands dense hourly coverage.

use std::path::Path;

use chrono::{DateTime, SecondsFormat, Timelike, Utc};

use super::series::{ExogenousFrame, HourlySeries};
use super::DataError;

/// Exogenous column names, in contract order: aggregate RTO demand, eight
/// zonal demands (MW), then four city temperatures (deg F).
pub const EXOGENOUS_COLUMNS: [&str; 13] = [
    "rto_demand_mw",
    "aep_mw",
    "aps_mw",
    "dom_mw",
    "midatl_mw",
    "ekpc_mw",
    "atsi_mw",
    "comed_mw",
    "duq_mw",
    "chicago_f",
    "cincinnati_f",
    "philadelphia_f",
    "pittsburgh_f",
];

/// Full market-file header: timestamp, price, then the exogenous columns.
pub const MARKET_CSV_HEADER: &str = "timestamp,dalmp,rto_demand_mw,aep_mw,aps_mw,dom_mw,midatl_mw,ekpc_mw,atsi_mw,comed_mw,duq_mw,chicago_f,cincinnati_f,philadelphia_f,pittsburgh_f";

fn parse_timestamp(row: usize, raw: &str) -> Result<DateTime<Utc>, DataError> {
    let ts = DateTime::parse_from_rfc3339(raw)
        .map_err(|_| DataError::Timestamp {
            row,
            value: raw.to_string(),
        })?
        .with_timezone(&Utc);
    if ts.minute() != 0 || ts.second() != 0 || ts.nanosecond() != 0 {
        return Err(DataError::Misaligned { ts });
    }
    Ok(ts)
}

fn parse_float(row: usize, column: &str, raw: &str) -> Result<f64, DataError> {
    raw.trim()
        .parse::<f64>()
        .map_err(|_| DataError::BadFloat {
            row,
            column: column.to_string(),
            value: raw.to_string(),
        })
}

pub fn format_timestamp(ts: DateTime<Utc>) -> String {
    ts.to_rfc3339_opts(SecondsFormat::Secs, true)
}

struct RawRows {
    header: Vec<String>,
    rows: Vec<(DateTime<Utc>, Vec<f64>)>,
}

/// Reads, parses, sorts by timestamp, and checks hourly continuity.
fn read_rows(path: &Path, expected_header: &[&str]) -> Result<RawRows, DataError> {
    let path_str = path.display().to_string();
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|source| DataError::Csv {
            path: path_str.clone(),
            source,
        })?;

    let header: Vec<String> = reader
        .headers()
        .map_err(|source| DataError::Csv {
            path: path_str.clone(),
            source,
        })?
        .iter()
        .map(str::to_string)
        .collect();
    if header != expected_header {
        return Err(DataError::Header {
            expected: expected_header.join(","),
            found: header.join(","),
        });
    }

    let mut rows = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let row = i + 2; // 1-based, after the header line
        let record = record.map_err(|source| DataError::Csv {
            path: path_str.clone(),
            source,
        })?;
        let ts = parse_timestamp(row, record.get(0).unwrap_or(""))?;
        let mut values = Vec::with_capacity(expected_header.len() - 1);
        for (j, name) in expected_header.iter().enumerate().skip(1) {
            values.push(parse_float(row, name, record.get(j).unwrap_or(""))?);
        }
        rows.push((ts, values));
    }
    if rows.is_empty() {
        return Err(DataError::Empty { path: path_str });
    }

    rows.sort_by_key(|(ts, _)| *ts);
    for pair in rows.windows(2) {
        if pair[0].0 == pair[1].0 {
            return Err(DataError::DuplicateTimestamp { ts: pair[0].0 });
        }
    }
    let start = rows[0].0;
    let end = rows[rows.len() - 1].0;
    let span_hours = (end - start).num_hours() as usize + 1;
    if span_hours != rows.len() {
        let mut missing = Vec::new();
        let mut expect = start;
        for (ts, _) in &rows {
            while expect < *ts {
                missing.push(expect);
                expect += chrono::Duration::hours(1);
            }
            expect += chrono::Duration::hours(1);
        }
        return Err(DataError::Gap { missing });
    }
    Ok(RawRows { header, rows })
}

/// Ingests a market CSV into an aligned price series and exogenous frame.
///
/// Validates the header, timestamp format and hour alignment, hourly
/// continuity (no gaps, no duplicates), strict price positivity, and
/// non-negative demand columns.
pub fn ingest_csv(path: impl AsRef<Path>) -> Result<(HourlySeries, ExogenousFrame), DataError> {
    let expected: Vec<&str> = MARKET_CSV_HEADER.split(',').collect();
    let raw = read_rows(path.as_ref(), &expected)?;
    let start = raw.rows[0].0;

    let mut prices = Vec::with_capacity(raw.rows.len());
    let mut columns: Vec<(String, Vec<f64>)> = EXOGENOUS_COLUMNS
        .iter()
        .map(|n| (n.to_string(), Vec::with_capacity(raw.rows.len())))
        .collect();
    for (ts, values) in &raw.rows {
        let price = values[0];
        if price <= 0.0 {
            return Err(DataError::NonPositivePrice {
                ts: *ts,
                value: price,
            });
        }
        prices.push(price);
        for (c, &v) in columns.iter_mut().zip(&values[1..]) {
            if c.0.ends_with("_mw") && v < 0.0 {
                return Err(DataError::NegativeDemand {
                    column: c.0.clone(),
                    ts: *ts,
                    value: v,
                });
            }
            c.1.push(v);
        }
    }
    let _ = raw.header;
    Ok((
        HourlySeries::new(start, prices)?,
        ExogenousFrame::new(start, columns)?,
    ))
}

/// Ingests an exogenous-only CSV (the market contract without the price
/// column), as supplied for the forecast day.
pub fn ingest_exogenous_csv(path: impl AsRef<Path>) -> Result<ExogenousFrame, DataError> {
    let mut expected = vec!["timestamp"];
    expected.extend(EXOGENOUS_COLUMNS);
    let raw = read_rows(path.as_ref(), &expected)?;
    let start = raw.rows[0].0;
    let mut columns: Vec<(String, Vec<f64>)> = EXOGENOUS_COLUMNS
        .iter()
        .map(|n| (n.to_string(), Vec::with_capacity(raw.rows.len())))
        .collect();
    for (ts, values) in &raw.rows {
        for (c, &v) in columns.iter_mut().zip(values) {
            if c.0.ends_with("_mw") && v < 0.0 {
                return Err(DataError::NegativeDemand {
                    column: c.0.clone(),
                    ts: *ts,
                    value: v,
                });
            }
            c.1.push(v);
        }
    }
    ExogenousFrame::new(start, columns)
}

fn io_err(path: &Path, source: std::io::Error) -> DataError {
    DataError::Io {
        path: path.display().to_string(),
        source,
    }
}

/// Writes a price series and exogenous frame as a market-contract CSV.
pub fn write_market_csv(
    path: impl AsRef<Path>,
    prices: &HourlySeries,
    exo: &ExogenousFrame,
) -> Result<(), DataError> {
    let path = path.as_ref();
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
    let mut out = String::with_capacity(prices.len() * 128);
    out.push_str(MARKET_CSV_HEADER);
    out.push('\n');
    for i in 0..prices.len() {
        out.push_str(&format_timestamp(prices.timestamp_at(i)));
        out.push(',');
        out.push_str(&prices.values()[i].to_string());
        for c in 0..exo.ncols() {
            out.push(',');
            out.push_str(&exo.column(c)[i].to_string());
        }
        out.push('\n');
    }
    std::fs::write(path, out).map_err(|e| io_err(path, e))
}

/// Writes a `timestamp,price` CSV (one row per forecast hour).
pub fn write_forecast_csv(
    path: impl AsRef<Path>,
    start: DateTime<Utc>,
    prices: &[f64],
) -> Result<(), DataError> {
    let path = path.as_ref();
    let mut out = String::from("timestamp,price\n");
    for (i, p) in prices.iter().enumerate() {
        out.push_str(&format_timestamp(start + chrono::Duration::hours(i as i64)));
        out.push(',');
        out.push_str(&p.to_string());
        out.push('\n');
    }
    std::fs::write(path, out).map_err(|e| io_err(path, e))
}

/// Reads a `timestamp,price` CSV back as an hourly series.
pub fn read_forecast_csv(path: impl AsRef<Path>) -> Result<HourlySeries, DataError> {
    let raw = read_rows(path.as_ref(), &["timestamp", "price"])?;
    let start = raw.rows[0].0;
    let values = raw.rows.iter().map(|(_, v)| v[0]).collect();
    HourlySeries::new(start, values)
}
