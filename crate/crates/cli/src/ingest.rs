//! `date,value` CSV ingestion.

use std::io::Read;
use std::path::Path;
use std::str::FromStr;

use chrono::{DateTime, NaiveDate, NaiveDateTime};
use serde::{Deserialize, Serialize};

use crate::error::{io_err, CliError, Result, RowIssue};

/// Whether the `value` column holds prices or log-returns.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SeriesKind {
    Prices,
    #[default]
    Returns,
}

impl FromStr for SeriesKind {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "prices" => Ok(SeriesKind::Prices),
            "returns" => Ok(SeriesKind::Returns),
            other => Err(format!("unknown series kind '{other}' (expected prices or returns)")),
        }
    }
}

impl std::fmt::Display for SeriesKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            SeriesKind::Prices => "prices",
            SeriesKind::Returns => "returns",
        })
    }
}

/// Log-returns with the timestamp of the observation each one ends on.
#[derive(Debug, Clone, PartialEq)]
pub struct ReturnSeries {
    pub timestamps: Vec<String>,
    pub values: Vec<f64>,
}

impl ReturnSeries {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

/// Accepts `YYYY-MM-DD`, `YYYY-MM-DDTHH:MM:SS[.f]` (or with a space) and RFC 3339.
pub fn parse_timestamp(s: &str) -> Option<NaiveDateTime> {
    if let Ok(d) = NaiveDate::parse_from_str(s, "%Y-%m-%d") {
        return d.and_hms_opt(0, 0, 0);
    }
    for fmt in ["%Y-%m-%dT%H:%M:%S%.f", "%Y-%m-%d %H:%M:%S%.f"] {
        if let Ok(t) = NaiveDateTime::parse_from_str(s, fmt) {
            return Some(t);
        }
    }
    DateTime::parse_from_rfc3339(s).ok().map(|t| t.naive_utc())
}

pub fn ingest(path: &Path, kind: SeriesKind, delimiter: u8) -> Result<ReturnSeries> {
    let file = std::fs::File::open(path).map_err(io_err(path))?;
    ingest_reader(file, kind, delimiter).map_err(|e| match e {
        IngestFailure::Rows(issues) => CliError::Ingest {
            path: path.to_path_buf(),
            issues,
        },
        IngestFailure::Format(message) => CliError::Format {
            path: path.to_path_buf(),
            message,
        },
    })
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum IngestFailure {
    /// Individual rows were rejected.
    Rows(Vec<RowIssue>),
    /// The file as a whole is unusable (header, row count, encoding).
    Format(String),
}

pub fn ingest_reader<R: Read>(reader: R, kind: SeriesKind, delimiter: u8) -> Result<ReturnSeries, IngestFailure> {
    let mut rdr = csv::ReaderBuilder::new()
        .delimiter(delimiter)
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(reader);

    let mut records = rdr.records();
    let header = match records.next() {
        Some(Ok(h)) => h,
        Some(Err(e)) => return Err(IngestFailure::Format(e.to_string())),
        None => return Err(IngestFailure::Format("file is empty".into())),
    };
    let names: Vec<String> = header.iter().map(|h| h.to_ascii_lowercase()).collect();
    if names != ["date", "value"] {
        return Err(IngestFailure::Format(format!(
            "expected header `date{0}value`, found `{1}`",
            delimiter as char,
            header.iter().collect::<Vec<_>>().join(&(delimiter as char).to_string())
        )));
    }

    let mut issues = Vec::new();
    let mut rows: Vec<(String, NaiveDateTime, f64)> = Vec::new();
    let mut last: Option<NaiveDateTime> = None;
    for (k, rec) in records.enumerate() {
        let line = k as u64 + 2;
        let rec = match rec {
            Ok(r) => r,
            Err(e) => {
                issues.push(RowIssue {
                    line: e.position().map_or(line, |p| p.line()),
                    message: e.to_string(),
                });
                continue;
            }
        };
        let line = rec.position().map_or(line, |p| p.line());
        if rec.len() == 1 && rec[0].is_empty() {
            continue;
        }
        if rec.len() != 2 {
            issues.push(RowIssue {
                line,
                message: format!("expected 2 fields, found {}", rec.len()),
            });
            continue;
        }
        let ts = parse_timestamp(&rec[0]);
        let value = rec[1].parse::<f64>();
        let mut ok = true;
        match ts {
            None => {
                issues.push(RowIssue {
                    line,
                    message: format!("unparseable date '{}'", &rec[0]),
                });
                ok = false;
            }
            Some(t) => {
                if let Some(prev) = last {
                    if t <= prev {
                        let what = if t == prev { "duplicate" } else { "out-of-order" };
                        issues.push(RowIssue {
                            line,
                            message: format!("{what} timestamp '{}'", &rec[0]),
                        });
                        ok = false;
                    }
                }
                last = Some(last.map_or(t, |p| p.max(t)));
            }
        }
        match value {
            Err(_) => {
                issues.push(RowIssue {
                    line,
                    message: format!("value '{}' is not a number", &rec[1]),
                });
                ok = false;
            }
            Ok(v) if !v.is_finite() => {
                issues.push(RowIssue {
                    line,
                    message: format!("value '{}' is not finite", &rec[1]),
                });
                ok = false;
            }
            Ok(v) if kind == SeriesKind::Prices && v <= 0.0 => {
                issues.push(RowIssue {
                    line,
                    message: format!("price {v} is not positive"),
                });
                ok = false;
            }
            Ok(_) => {}
        }
        if ok {
            rows.push((rec[0].to_string(), ts.unwrap(), value.unwrap()));
        }
    }
    if !issues.is_empty() {
        return Err(IngestFailure::Rows(issues));
    }

    match kind {
        SeriesKind::Returns => {
            if rows.is_empty() {
                return Err(IngestFailure::Format("need at least 1 return row".into()));
            }
            Ok(ReturnSeries {
                timestamps: rows.iter().map(|r| r.0.clone()).collect(),
                values: rows.iter().map(|r| r.2).collect(),
            })
        }
        SeriesKind::Prices => {
            if rows.len() < 2 {
                return Err(IngestFailure::Format(format!(
                    "need at least 2 price rows, found {}",
                    rows.len()
                )));
            }
            Ok(ReturnSeries {
                timestamps: rows[1..].iter().map(|r| r.0.clone()).collect(),
                values: rows.windows(2).map(|w| (w[1].2 / w[0].2).ln()).collect(),
            })
        }
    }
}
