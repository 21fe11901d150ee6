//! Gauge-record parsing, annual statistics, and mean-sea-level drift
//! estimation.
//!
//! The input is an hourly tide-gauge CSV. Each calendar year with enough
//! coverage yields a mean level, a maximum level, and a maximum surge
//! (level minus annual mean minus mean tide); the annual means then feed a
//! drift/volatility estimate for the mean-sea-level process.

use chrono::{DateTime, Datelike, NaiveDate, Timelike, Utc};
use std::io::{BufRead, BufReader, Read};

use crate::error::{Error, Result};

/// Default missing-value sentinel in gauge exports.
pub const MISSING_SENTINEL: f64 = -32767.0;

const EXPECTED_HEADER: &str = "timestamp,level_mm";

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GaugeRecord {
    pub timestamp: DateTime<Utc>,
    pub level_mm: f64,
}

/// Hourly sea-level series with strictly increasing timestamps. Missing
/// hours are simply absent; sentinel rows are dropped at parse time and
/// counted in `dropped_missing`.
#[derive(Debug, Clone, PartialEq)]
pub struct GaugeSeries {
    pub station_id: String,
    pub records: Vec<GaugeRecord>,
    pub dropped_missing: usize,
}

/// Per-year summary of an hourly series.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AnnualStats {
    pub year: i32,
    pub mean_level: f64,
    pub max_level: f64,
    /// max over the year's hours of (level - year mean - mean tide)
    pub max_surge: f64,
    pub n_obs: usize,
}

/// Parse a two-column gauge CSV (`timestamp,level_mm`, one header row).
///
/// Timestamps must be ISO-8601 at hourly resolution and strictly
/// increasing. Rows whose level equals `sentinel` are dropped and counted.
/// Errors carry 1-based line numbers.
pub fn parse_gauge_csv<R: Read>(source: R, station_id: &str, sentinel: f64) -> Result<GaugeSeries> {
    let reader = BufReader::new(source);
    let mut records: Vec<GaugeRecord> = Vec::new();
    let mut dropped = 0usize;
    let mut saw_header = false;

    for (idx, line) in reader.lines().enumerate() {
        let lineno = idx + 1;
        let line = line?;
        let line = line.trim();
        if !saw_header {
            if line != EXPECTED_HEADER {
                return Err(Error::Structure {
                    line: lineno,
                    msg: format!("expected header `{EXPECTED_HEADER}`, got `{line}`"),
                });
            }
            saw_header = true;
            continue;
        }
        if line.is_empty() {
            continue;
        }
        let mut cols = line.split(',');
        let (ts_str, level_str) = match (cols.next(), cols.next(), cols.next()) {
            (Some(t), Some(l), None) => (t.trim(), l.trim()),
            _ => {
                return Err(Error::Parse {
                    line: lineno,
                    msg: "expected exactly two columns".into(),
                })
            }
        };
        let ts = DateTime::parse_from_rfc3339(ts_str)
            .map_err(|e| Error::Parse {
                line: lineno,
                msg: format!("bad timestamp `{ts_str}`: {e}"),
            })?
            .with_timezone(&Utc);
        if ts.minute() != 0 || ts.second() != 0 || ts.nanosecond() != 0 {
            return Err(Error::Parse {
                line: lineno,
                msg: format!("timestamp `{ts_str}` is not on an hour boundary"),
            });
        }
        let level: f64 = level_str.parse().map_err(|e| Error::Parse {
            line: lineno,
            msg: format!("bad level `{level_str}`: {e}"),
        })?;
        if !level.is_finite() {
            return Err(Error::Parse {
                line: lineno,
                msg: format!("non-finite level `{level_str}`"),
            });
        }
        if level == sentinel {
            dropped += 1;
            continue;
        }
        if let Some(prev) = records.last() {
            if ts <= prev.timestamp {
                return Err(Error::Structure {
                    line: lineno,
                    msg: format!("timestamp `{ts_str}` does not increase past {}", prev.timestamp),
                });
            }
        }
        records.push(GaugeRecord { timestamp: ts, level_mm: level });
    }

    if !saw_header {
        return Err(Error::Structure { line: 1, msg: "empty input, missing header".into() });
    }
    Ok(GaugeSeries { station_id: station_id.to_string(), records, dropped_missing: dropped })
}

fn hours_in_year(year: i32) -> usize {
    if NaiveDate::from_ymd_opt(year, 2, 29).is_some() {
        366 * 24
    } else {
        365 * 24
    }
}

/// Per-calendar-year statistics for every year whose hourly coverage is at
/// least `min_coverage`. Coverage counts observed hours against the year's
/// full hour count (leap years have 8784). Empty input yields an empty list.
pub fn annual_stats(
    series: &GaugeSeries,
    mean_tide: f64,
    min_coverage: f64,
) -> Result<Vec<AnnualStats>> {
    if !(min_coverage > 0.0 && min_coverage <= 1.0) {
        return Err(Error::Domain(format!("min_coverage must be in (0, 1], got {min_coverage}")));
    }
    if !mean_tide.is_finite() {
        return Err(Error::Domain("mean_tide must be finite".into()));
    }

    let mut out = Vec::new();
    let mut i = 0;
    let records = &series.records;
    while i < records.len() {
        let year = records[i].timestamp.year();
        let mut j = i;
        let mut sum = 0.0;
        let mut max = f64::NEG_INFINITY;
        while j < records.len() && records[j].timestamp.year() == year {
            sum += records[j].level_mm;
            max = max.max(records[j].level_mm);
            j += 1;
        }
        let n = j - i;
        let coverage = n as f64 / hours_in_year(year) as f64;
        if coverage >= min_coverage {
            let mean = sum / n as f64;
            let max_surge = records[i..j]
                .iter()
                .map(|r| r.level_mm - mean - mean_tide)
                .fold(f64::NEG_INFINITY, f64::max);
            out.push(AnnualStats { year, mean_level: mean, max_level: max, max_surge, n_obs: n });
        }
        i = j;
    }
    Ok(out)
}

/// Estimate arithmetic-Brownian-motion drift (mm/yr) and volatility
/// (mm/sqrt(yr)) from annual mean levels.
///
/// Gaps are handled by normalizing each increment by its elapsed years:
/// the drift is total rise over total elapsed time, and the volatility is
/// the unbiased standard deviation of the gap-normalized increments, each
/// weighted by its gap so that longer intervals carry their larger
/// variance.
pub fn estimate_abm(annual_means: &[(i32, f64)]) -> Result<(f64, f64)> {
    if annual_means.len() < 3 {
        return Err(Error::InsufficientData(format!(
            "drift estimation needs at least 3 annual means, got {}",
            annual_means.len()
        )));
    }
    let mut pts = annual_means.to_vec();
    pts.sort_by_key(|&(y, _)| y);
    for w in pts.windows(2) {
        if w[0].0 == w[1].0 {
            return Err(Error::Domain(format!("duplicate year {} in annual means", w[0].0)));
        }
    }

    let mut sum_dw = 0.0;
    let mut sum_gap = 0.0;
    for w in pts.windows(2) {
        sum_dw += w[1].1 - w[0].1;
        sum_gap += (w[1].0 - w[0].0) as f64;
    }
    let mu = sum_dw / sum_gap;

    let k = pts.len() - 1;
    let mut ss = 0.0;
    for w in pts.windows(2) {
        let gap = (w[1].0 - w[0].0) as f64;
        let dw = w[1].1 - w[0].1;
        // (dw - mu*gap)/sqrt(gap) has variance sigma^2 under the ABM
        ss += (dw - mu * gap).powi(2) / gap;
    }
    let sigma = (ss / (k - 1) as f64).sqrt();
    Ok((mu, sigma))
}
