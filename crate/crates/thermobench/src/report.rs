//! Report tables: seed-aggregated metrics with a provenance block, emitted
//! as CSV or JSON. Emission is fully deterministic, so re-running the same
//! configuration reproduces every artifact byte for byte.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::eval::Metrics;

/// Mean and sample standard deviation over per-seed values.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Stat {
    pub mean: f64,
    pub std: f64,
}

impl Stat {
    pub fn from_samples(values: &[f64]) -> Stat {
        let n = values.len();
        if n == 0 {
            return Stat { mean: f64::NAN, std: f64::NAN };
        }
        let mean = values.iter().sum::<f64>() / n as f64;
        let std = if n < 2 {
            0.0
        } else {
            (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n as f64 - 1.0)).sqrt()
        };
        Stat { mean, std }
    }
}

/// One table row: a labeled pipeline with metrics aggregated over seeds.
/// `count` is the row's integer context (feature count, replica count).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportRow {
    pub label: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    #[serde(default)]
    pub count: Option<usize>,
    pub mae: Stat,
    pub mse: Stat,
    pub rmse: Stat,
    /// Raw per-seed RMSE values backing the aggregate columns.
    pub rmse_per_seed: Vec<f64>,
    /// Populated when the row's pipeline failed; metrics are NaN then.
    #[serde(skip_serializing_if = "Option::is_none")]
    #[serde(default)]
    pub error: Option<String>,
}

impl ReportRow {
    pub fn from_metrics(label: &str, count: Option<usize>, per_seed: &[Metrics]) -> ReportRow {
        let collect = |f: fn(&Metrics) -> f64| -> Vec<f64> { per_seed.iter().map(f).collect() };
        let rmse_per_seed = collect(|m| m.rmse);
        ReportRow {
            label: label.to_string(),
            count,
            mae: Stat::from_samples(&collect(|m| m.mae)),
            mse: Stat::from_samples(&collect(|m| m.mse)),
            rmse: Stat::from_samples(&rmse_per_seed),
            rmse_per_seed,
            error: None,
        }
    }

    pub fn failed(label: &str, count: Option<usize>, error: &Error) -> ReportRow {
        ReportRow {
            label: label.to_string(),
            count,
            mae: Stat { mean: f64::NAN, std: f64::NAN },
            mse: Stat { mean: f64::NAN, std: f64::NAN },
            rmse: Stat { mean: f64::NAN, std: f64::NAN },
            rmse_per_seed: Vec::new(),
            error: Some(error.to_string()),
        }
    }
}

/// Everything needed to reproduce a report: the seeds, a hash of the full
/// run configuration, the software version, and the schema manifest.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub seeds: Vec<u64>,
    pub config_hash: String,
    pub version: String,
    pub schema: serde_json::Value,
}

/// SHA-256 over the canonical JSON form of a configuration value.
pub fn config_hash<T: Serialize>(config: &T) -> Result<String> {
    let canonical = serde_json::to_string(config)?;
    let digest = Sha256::digest(canonical.as_bytes());
    let mut hex = String::with_capacity(64);
    for byte in digest {
        write!(hex, "{byte:02x}").expect("writing to String cannot fail");
    }
    Ok(hex)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub title: String,
    pub rows: Vec<ReportRow>,
    pub provenance: Provenance,
}

impl Report {
    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        out.push_str("label,count,mae_mean,mae_std,mse_mean,mse_std,rmse_mean,rmse_std\n");
        for row in &self.rows {
            let count = row.count.map(|c| c.to_string()).unwrap_or_default();
            let _ = writeln!(
                out,
                "{},{},{},{},{},{},{},{}",
                row.label,
                count,
                row.mae.mean,
                row.mae.std,
                row.mse.mean,
                row.mse.std,
                row.rmse.mean,
                row.rmse.std
            );
        }
        out
    }

    pub fn to_json(&self) -> Result<String> {
        let mut s = serde_json::to_string_pretty(self)?;
        s.push('\n');
        Ok(s)
    }

    pub fn from_json(s: &str) -> Result<Report> {
        Ok(serde_json::from_str(s)?)
    }

    /// Write `<stem>.csv` and/or `<stem>.json` into `dir` depending on the
    /// requested format; `None` writes both.
    pub fn write(&self, dir: &Path, stem: &str, format: Option<Format>) -> Result<()> {
        fs::create_dir_all(dir)?;
        if format.is_none() || format == Some(Format::Csv) {
            fs::write(dir.join(format!("{stem}.csv")), self.to_csv())?;
        }
        if format.is_none() || format == Some(Format::Json) {
            fs::write(dir.join(format!("{stem}.json")), self.to_json()?)?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
}

impl std::str::FromStr for Format {
    type Err = Error;
    fn from_str(s: &str) -> Result<Format> {
        match s {
            "csv" => Ok(Format::Csv),
            "json" => Ok(Format::Json),
            other => Err(Error::config(format!(
                "unknown format {other:?} (expected csv or json)"
            ))),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample_report() -> Report {
        let per_seed = vec![
            Metrics { mae: 0.2, mse: 0.09, rmse: 0.3, n: 10 },
            Metrics { mae: 0.25, mse: 0.16, rmse: 0.4, n: 10 },
        ];
        Report {
            title: "demo".into(),
            rows: vec![ReportRow::from_metrics("ols", Some(7), &per_seed)],
            provenance: Provenance {
                seeds: vec![0, 1],
                config_hash: "abc".into(),
                version: "0.1.0".into(),
                schema: serde_json::json!({"target": "y"}),
            },
        }
    }

    #[test]
    fn stats_aggregate_mean_and_std() {
        let s = Stat::from_samples(&[0.3, 0.4]);
        assert!((s.mean - 0.35).abs() < 1e-12);
        assert!((s.std - (0.005f64).sqrt()).abs() < 1e-12);
        assert_eq!(Stat::from_samples(&[1.0]).std, 0.0);
    }

    #[test]
    fn csv_has_header_and_one_line_per_row() {
        let r = sample_report();
        let csv = r.to_csv();
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines.len(), 2);
        assert!(lines[0].starts_with("label,count,"));
        assert!(lines[1].starts_with("ols,7,"));

        let empty = Report { rows: vec![], ..r };
        assert_eq!(empty.to_csv().lines().count(), 1);
    }

    #[test]
    fn json_roundtrip_is_identity() {
        let r = sample_report();
        let json = r.to_json().unwrap();
        let back = Report::from_json(&json).unwrap();
        assert_eq!(back, r);
        assert_eq!(back.to_json().unwrap(), json);
    }

    #[test]
    fn hash_changes_with_any_config_field() {
        #[derive(Serialize)]
        struct Cfg {
            a: u64,
            b: String,
        }
        let base = config_hash(&Cfg { a: 1, b: "x".into() }).unwrap();
        assert_eq!(base.len(), 64);
        assert_eq!(base, config_hash(&Cfg { a: 1, b: "x".into() }).unwrap());
        assert_ne!(base, config_hash(&Cfg { a: 2, b: "x".into() }).unwrap());
        assert_ne!(base, config_hash(&Cfg { a: 1, b: "y".into() }).unwrap());
    }

    #[test]
    fn emission_is_deterministic() {
        let dir = tempfile::tempdir().unwrap();
        let r = sample_report();
        r.write(dir.path(), "demo", None).unwrap();
        let csv1 = fs::read(dir.path().join("demo.csv")).unwrap();
        let json1 = fs::read(dir.path().join("demo.json")).unwrap();
        r.write(dir.path(), "demo", None).unwrap();
        assert_eq!(csv1, fs::read(dir.path().join("demo.csv")).unwrap());
        assert_eq!(json1, fs::read(dir.path().join("demo.json")).unwrap());
    }

    #[test]
    fn failed_rows_carry_the_error() {
        let row = ReportRow::failed("svr", None, &Error::numerical("did not converge"));
        assert!(row.rmse.mean.is_nan());
        assert!(row.error.as_deref().unwrap().contains("converge"));
    }
}
