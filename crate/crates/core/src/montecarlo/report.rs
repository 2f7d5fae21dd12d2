//! Aggregated experiment output and its CSV / JSON encodings.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::Result;

use super::config::{config_hash, ExperimentConfig};
use super::stats::{summarize, wilson_interval};

/// One grid point of one series.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportRow {
    pub x: f64,
    pub scheme: String,
    pub mean: f64,
    pub std: f64,
    pub ci_lo: f64,
    pub ci_hi: f64,
    /// Bits for error rates, trials for per-trial means.
    pub n: u64,
}

impl ReportRow {
    /// Pooled error rate with a Wilson interval; `std` is across trials.
    pub fn error_rate(x: f64, scheme: impl Into<String>, errors: u64, bits: u64, per_trial: &[f64]) -> Self {
        let (ci_lo, ci_hi) = wilson_interval(errors, bits);
        let std = if per_trial.len() > 1 { summarize(per_trial).std } else { 0.0 };
        Self { x, scheme: scheme.into(), mean: errors as f64 / bits as f64, std, ci_lo, ci_hi, n: bits }
    }

    /// Mean of per-trial values with a Student-t interval.
    pub fn trial_mean(x: f64, scheme: impl Into<String>, values: &[f64]) -> Self {
        let s = summarize(values);
        Self { x, scheme: scheme.into(), mean: s.mean, std: s.std, ci_lo: s.ci_lo, ci_hi: s.ci_hi, n: s.n as u64 }
    }

    /// A deterministic value (closed form), zero-width interval.
    pub fn exact(x: f64, scheme: impl Into<String>, value: f64) -> Self {
        Self { x, scheme: scheme.into(), mean: value, std: 0.0, ci_lo: value, ci_hi: value, n: 1 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub experiment: String,
    pub seed: u64,
    pub config_hash: String,
    /// Meaning of the `x` column.
    pub x_label: String,
    /// Unit of `mean`, `std` and the interval bounds.
    pub value_unit: String,
    pub rows: Vec<ReportRow>,
    pub notes: Vec<String>,
    pub config: ExperimentConfig,
}

impl ExperimentReport {
    pub fn new(experiment: &str, cfg: &ExperimentConfig, x_label: &str, value_unit: &str) -> Self {
        Self {
            experiment: experiment.into(),
            seed: cfg.sweep.seed,
            config_hash: config_hash(cfg),
            x_label: x_label.into(),
            value_unit: value_unit.into(),
            rows: Vec::new(),
            notes: Vec::new(),
            config: cfg.clone(),
        }
    }

    pub fn series<'a>(&'a self, scheme: &str) -> impl Iterator<Item = &'a ReportRow> + 'a {
        let scheme = scheme.to_owned();
        self.rows.iter().filter(move |r| r.scheme == scheme)
    }

    /// The row of `scheme` at `x`, if present.
    pub fn row(&self, scheme: &str, x: f64) -> Option<&ReportRow> {
        self.rows.iter().find(|r| r.scheme == scheme && r.x == x)
    }

    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        for r in &self.rows {
            w.serialize(r)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn to_csv_string(&self) -> Result<String> {
        let mut buf = Vec::new();
        self.write_csv(&mut buf)?;
        Ok(String::from_utf8(buf).expect("csv output is utf-8"))
    }

    pub fn to_json_string(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}
