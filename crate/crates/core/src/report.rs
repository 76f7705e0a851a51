//! Report records and their JSON/CSV emission.
//!
//! The JSON payload is deterministic for a fixed config: maps are ordered,
//! and the only wall-clock field is the run-level `timestamp`.

use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::Value;
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Format {
    #[default]
    Json,
    Csv,
}

impl std::str::FromStr for Format {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "json" => Ok(Format::Json),
            "csv" => Ok(Format::Csv),
            other => Err(Error::Config(format!(
                "unknown format \"{other}\" (json or csv)"
            ))),
        }
    }
}

#[derive(Debug, Clone, Serialize, PartialEq)]
pub struct Provenance {
    pub version: String,
    pub seed: u64,
}

/// One row of a plottable series.
#[derive(Debug, Clone, Serialize, PartialEq)]
pub struct SeriesRow {
    pub k: i64,
    pub term: f64,
    pub partial_sum: f64,
}

/// One computed eigenvalue and the value it is compared with.
#[derive(Debug, Clone, Serialize, PartialEq)]
pub struct SpectrumRow {
    pub re: f64,
    pub im: f64,
    pub target_re: f64,
    pub target_im: f64,
}

#[derive(Debug, Clone, Serialize, PartialEq, Default)]
pub struct Tables {
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub series: Vec<(String, Vec<SeriesRow>)>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub spectra: Vec<(String, Vec<SpectrumRow>)>,
}

impl Tables {
    fn is_empty(&self) -> bool {
        self.series.is_empty() && self.spectra.is_empty()
    }
}

#[derive(Debug, Clone, Serialize, PartialEq)]
pub struct Report {
    pub command: String,
    pub inputs_digest: String,
    pub results: Value,
    pub pass: bool,
    pub provenance: Provenance,
    #[serde(skip_serializing_if = "Tables::is_empty")]
    pub tables: Tables,
}

/// Reports of one run plus the wall-clock stamp.
#[derive(Debug, Clone, Serialize)]
pub struct RunOutput {
    pub pass: bool,
    pub reports: Vec<Report>,
    pub timestamp: u64,
}

impl RunOutput {
    pub fn new(reports: Vec<Report>) -> Self {
        let timestamp = std::time::SystemTime::now()
            .duration_since(std::time::UNIX_EPOCH)
            .map(|d| d.as_secs())
            .unwrap_or(0);
        Self {
            pass: reports.iter().all(|r| r.pass),
            reports,
            timestamp,
        }
    }

    /// JSON without the timestamp; equal across reruns of the same config.
    pub fn payload(&self) -> Result<String> {
        #[derive(Serialize)]
        struct Payload<'a> {
            pass: bool,
            reports: &'a [Report],
        }
        to_json(&Payload {
            pass: self.pass,
            reports: &self.reports,
        })
    }
}

fn to_json<T: Serialize>(v: &T) -> Result<String> {
    serde_json::to_string_pretty(v).map_err(|e| Error::Config(format!("serialization failed: {e}")))
}

/// Hex SHA-256 of `bytes`.
pub fn digest(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> Error + '_ {
    move |source| Error::Io {
        path: path.to_path_buf(),
        source,
    }
}

fn csv_err(path: &Path) -> impl FnOnce(csv::Error) -> Error + '_ {
    move |e| Error::Io {
        path: path.to_path_buf(),
        source: std::io::Error::other(e),
    }
}

fn write_csv<T: Serialize>(path: &Path, rows: &[T]) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(csv_err(path))?;
    for r in rows {
        w.serialize(r).map_err(csv_err(path))?;
    }
    w.flush().map_err(io_err(path))
}

fn slug(s: &str) -> String {
    s.chars()
        .map(|c| if c.is_ascii_alphanumeric() { c } else { '_' })
        .collect()
}

/// Writes `report.json`, and for CSV also one table per series or spectrum
/// plus `summary.csv`. Returns the written paths.
pub fn emit_report(run: &RunOutput, format: Format, out_dir: &Path) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(out_dir).map_err(io_err(out_dir))?;
    let mut written = Vec::new();
    let json_path = out_dir.join("report.json");
    fs::write(&json_path, to_json(run)? + "\n").map_err(io_err(&json_path))?;
    written.push(json_path);
    if format == Format::Csv {
        #[derive(Serialize)]
        struct SummaryRow<'a> {
            command: &'a str,
            pass: bool,
        }
        let summary: Vec<SummaryRow> = run
            .reports
            .iter()
            .map(|r| SummaryRow {
                command: &r.command,
                pass: r.pass,
            })
            .collect();
        let path = out_dir.join("summary.csv");
        write_csv(&path, &summary)?;
        written.push(path);
        for r in &run.reports {
            for (name, rows) in &r.tables.series {
                let path = out_dir.join(format!("{}_{}.csv", slug(&r.command), slug(name)));
                write_csv(&path, rows)?;
                written.push(path);
            }
            for (name, rows) in &r.tables.spectra {
                let path = out_dir.join(format!("{}_{}.csv", slug(&r.command), slug(name)));
                write_csv(&path, rows)?;
                written.push(path);
            }
        }
    }
    Ok(written)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> RunOutput {
        RunOutput::new(vec![Report {
            command: "hs-series".into(),
            inputs_digest: digest(b"cfg"),
            results: serde_json::json!({"b": 1.0, "a": [1, 2]}),
            pass: true,
            provenance: Provenance {
                version: "0.1.0".into(),
                seed: 7,
            },
            tables: Tables {
                series: vec![(
                    "r2".into(),
                    vec![
                        SeriesRow {
                            k: 0,
                            term: 0.5,
                            partial_sum: 0.5,
                        },
                        SeriesRow {
                            k: 1,
                            term: 0.25,
                            partial_sum: 0.75,
                        },
                    ],
                )],
                spectra: vec![],
            },
        }])
    }

    #[test]
    fn csv_tables_have_the_documented_columns() {
        let dir = tempfile::tempdir().unwrap();
        let files = emit_report(&sample(), Format::Csv, dir.path()).unwrap();
        assert_eq!(files.len(), 3);
        let series = fs::read_to_string(dir.path().join("hs_series_r2.csv")).unwrap();
        assert_eq!(series.lines().next(), Some("k,term,partial_sum"));
        let json: Value = serde_json::from_str(&fs::read_to_string(&files[0]).unwrap()).unwrap();
        assert_eq!(json["reports"][0]["command"], "hs-series");
        assert!(json["timestamp"].is_u64());
    }

    #[test]
    fn payload_omits_timestamp_and_is_ordered() {
        let p = sample().payload().unwrap();
        assert!(!p.contains("timestamp"));
        assert!(p.find("\"a\"").unwrap() < p.find("\"b\"").unwrap());
        assert_eq!(digest(b"abc").len(), 64);
    }

    #[test]
    fn unwritable_directory_names_the_path() {
        let dir = tempfile::tempdir().unwrap();
        let blocker = dir.path().join("file");
        fs::write(&blocker, "x").unwrap();
        let e = emit_report(&sample(), Format::Json, &blocker.join("sub")).unwrap_err();
        assert!(e.to_string().contains("file"), "{e}");
    }
}
