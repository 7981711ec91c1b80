//! Shared report plumbing: estimates with confidence half-widths, config
//! hashing, and JSON/CSV emission.
//!
//! Every report embeds the tool version, a hash of its canonical
//! configuration, and the master seed, so any result row can be traced back
//! to the exact run that produced it and reproduced bit for bit.

use crate::error::{Error, Result};
use crate::prob::KahanSum;
use sha2::{Digest, Sha256};

/// Crate version embedded in every report.
pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

/// Hex SHA-256 of the canonical JSON encoding of a configuration value.
///
/// `serde_json` maps keep sorted key order, so structurally equal configs
/// hash identically.
pub fn config_hash(config: &serde_json::Value) -> String {
    let canonical = config.to_string();
    let digest = Sha256::digest(canonical.as_bytes());
    digest.iter().map(|b| format!("{b:02x}")).collect()
}

/// A Monte Carlo estimate with a three-standard-error half-width.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct Estimate {
    /// Sample mean.
    pub mean: f64,
    /// Three standard errors of the mean.
    pub half_width: f64,
}

impl Estimate {
    /// Builds an estimate from raw samples. Needs at least two samples.
    ///
    /// Samples are reduced sequentially with compensated summation, so the
    /// result does not depend on how the samples were produced in parallel.
    pub fn from_samples(samples: &[f64]) -> Result<Estimate> {
        let n = samples.len();
        if n < 2 {
            return Err(Error::invalid("an estimate needs at least 2 samples"));
        }
        let mut sum = KahanSum::default();
        for &s in samples {
            sum.add(s);
        }
        let mean = sum.value() / n as f64;
        let mut sq = KahanSum::default();
        for &s in samples {
            sq.add((s - mean) * (s - mean));
        }
        let var = (sq.value() / (n as f64 - 1.0)).max(0.0);
        Ok(Estimate {
            mean,
            half_width: 3.0 * (var / n as f64).sqrt(),
        })
    }

    /// Whether the estimate is consistent with being at most `bound`,
    /// giving the bound the benefit of the half-width.
    pub fn within(&self, bound: f64) -> bool {
        self.mean <= bound + self.half_width
    }
}

/// One verdict row of a CSV report.
#[derive(Debug, Clone, serde::Serialize)]
pub struct CsvRow {
    /// Hash of the producing run's configuration.
    pub config_hash: String,
    /// Metric name, e.g. `distortion` or `critic::frequency(e0=1)`.
    pub metric: String,
    /// Point estimate or exact value, when the metric has one.
    pub estimate: Option<f64>,
    /// Confidence half-width, when the metric is sampled.
    pub half_width: Option<f64>,
    /// The bound the metric is compared against, when there is one.
    pub bound: Option<f64>,
    /// Whether the comparison passed, when there is one.
    pub pass: Option<bool>,
}

impl CsvRow {
    /// A row carrying an estimate and its bound comparison.
    pub fn checked(config_hash: &str, metric: &str, estimate: Estimate, bound: f64) -> CsvRow {
        CsvRow {
            config_hash: config_hash.to_string(),
            metric: metric.to_string(),
            estimate: Some(estimate.mean),
            half_width: Some(estimate.half_width),
            bound: Some(bound),
            pass: Some(estimate.within(bound)),
        }
    }

    /// A row carrying an estimate with no bound.
    pub fn plain(config_hash: &str, metric: &str, estimate: Estimate) -> CsvRow {
        CsvRow {
            config_hash: config_hash.to_string(),
            metric: metric.to_string(),
            estimate: Some(estimate.mean),
            half_width: Some(estimate.half_width),
            bound: None,
            pass: None,
        }
    }

    /// A row carrying a single exact value.
    pub fn value(config_hash: &str, metric: &str, value: f64) -> CsvRow {
        CsvRow {
            config_hash: config_hash.to_string(),
            metric: metric.to_string(),
            estimate: Some(value),
            half_width: None,
            bound: None,
            pass: None,
        }
    }
}

/// Writes rows as RFC 4180 CSV with a header line; empty fields stand for
/// absent values.
pub fn write_csv<W: std::io::Write>(out: W, rows: &[CsvRow]) -> Result<()> {
    let mut writer = csv::Writer::from_writer(out);
    for row in rows {
        writer
            .serialize(row)
            .map_err(|e| Error::Numeric(format!("csv serialization failed: {e}")))?;
    }
    writer
        .flush()
        .map_err(|e| Error::Numeric(format!("csv flush failed: {e}")))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn estimate_matches_hand_computation() {
        let est = Estimate::from_samples(&[1.0, 2.0, 3.0, 4.0]).unwrap();
        assert_abs_diff_eq!(est.mean, 2.5);
        // Unbiased variance 5/3; half-width 3 sqrt(5/12).
        assert_abs_diff_eq!(
            est.half_width,
            3.0 * (5.0f64 / 12.0).sqrt(),
            epsilon = 1e-12
        );
        assert!(est.within(2.0));
        assert!(!est.within(0.2));
        assert!(Estimate::from_samples(&[1.0]).is_err());
    }

    #[test]
    fn config_hash_is_order_insensitive_and_stable() {
        let a = serde_json::json!({ "alpha": 1, "beta": [1, 2] });
        let b = serde_json::json!({ "beta": [1, 2], "alpha": 1 });
        assert_eq!(config_hash(&a), config_hash(&b));
        assert_eq!(config_hash(&a).len(), 64);
        let c = serde_json::json!({ "alpha": 2, "beta": [1, 2] });
        assert_ne!(config_hash(&a), config_hash(&c));
    }

    #[test]
    fn csv_emits_header_and_blank_optionals() {
        let rows = vec![
            CsvRow::checked(
                "abc",
                "distortion",
                Estimate {
                    mean: 0.1,
                    half_width: 0.01,
                },
                0.2,
            ),
            CsvRow::value("abc", "rate", 0.5),
        ];
        let mut buf = Vec::new();
        write_csv(&mut buf, &rows).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        assert_eq!(
            lines.next().unwrap(),
            "config_hash,metric,estimate,half_width,bound,pass"
        );
        assert_eq!(lines.next().unwrap(), "abc,distortion,0.1,0.01,0.2,true");
        assert_eq!(lines.next().unwrap(), "abc,rate,0.5,,,");
    }
}
