//! Aggregated Monte Carlo output.

use std::io::Write;

use serde::Serialize;
use statrs::distribution::{ContinuousCDF, Normal};

use crate::error::{Error, Result};

/// One aggregated cell. `rate` is a coverage probability for estimation
/// designs and a rejection rate for test designs.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ResultRow {
    /// Parameter name (`a1`, `w1`, ...), separation `x`, or grid point.
    pub key: String,
    pub n: usize,
    pub p: usize,
    pub c: f64,
    pub truth: Option<f64>,
    pub mean: f64,
    pub sd: f64,
    /// Monte Carlo standard error of `mean`.
    pub mean_se: f64,
    pub rate: Option<f64>,
    /// `sqrt(rate (1 - rate) / R)`.
    pub rate_se: Option<f64>,
    /// Successful replications entering the aggregates.
    pub replications: usize,
    /// Replications where the procedure failed.
    pub failures: usize,
    /// Replications rejected because no null spectrum fits the moments.
    pub infeasible: usize,
}

impl ResultRow {
    pub fn failure_rate(&self) -> f64 {
        let total = self.replications + self.failures;
        if total == 0 {
            0.0
        } else {
            self.failures as f64 / total as f64
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct ResultTable {
    pub design: String,
    pub rows: Vec<ResultRow>,
}

impl ResultTable {
    pub fn new(design: &str) -> Self {
        Self {
            design: design.to_string(),
            rows: Vec::new(),
        }
    }

    /// Rows matching `key` (and `n`, `c` when given).
    pub fn find(&self, key: &str, n: Option<usize>, c: Option<f64>) -> Vec<&ResultRow> {
        self.rows
            .iter()
            .filter(|r| r.key == key)
            .filter(|r| n.is_none_or(|n| r.n == n))
            .filter(|r| c.is_none_or(|c| (r.c - c).abs() < 1e-12))
            .collect()
    }

    /// Writes the table as CSV with a header row.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        for row in &self.rows {
            w.serialize(row).map_err(csv_error)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn to_csv_string(&self) -> Result<String> {
        let mut buf = Vec::new();
        self.write_csv(&mut buf)?;
        String::from_utf8(buf).map_err(|e| Error::Parse(e.to_string()))
    }
}

fn csv_error(e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::Io(io),
        other => Error::Parse(format!("{other:?}")),
    }
}

/// Sample mean, standard deviation and standard error of the mean.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Summary {
    pub count: usize,
    pub mean: f64,
    pub sd: f64,
    pub mean_se: f64,
    pub variance: f64,
    /// Standard error of `variance` from the fourth central moment.
    pub variance_se: f64,
}

pub fn summarize(values: &[f64]) -> Summary {
    let count = values.len();
    if count == 0 {
        return Summary {
            count,
            mean: f64::NAN,
            sd: f64::NAN,
            mean_se: f64::NAN,
            variance: f64::NAN,
            variance_se: f64::NAN,
        };
    }
    let r = count as f64;
    let mean = values.iter().sum::<f64>() / r;
    let m2 = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / r;
    let m4 = values.iter().map(|v| (v - mean).powi(4)).sum::<f64>() / r;
    let variance = if count > 1 { m2 * r / (r - 1.0) } else { 0.0 };
    let sd = variance.sqrt();
    Summary {
        count,
        mean,
        sd,
        mean_se: sd / r.sqrt(),
        variance,
        variance_se: ((m4 - m2 * m2).max(0.0) / r).sqrt(),
    }
}

/// `sqrt(q (1 - q) / R)`.
pub fn binomial_se(q: f64, r: usize) -> f64 {
    if r == 0 {
        f64::NAN
    } else {
        (q * (1.0 - q) / r as f64).sqrt()
    }
}

/// One-sample Kolmogorov–Smirnov test against the standard normal; returns
/// the statistic and its asymptotic p-value.
pub fn ks_standard_normal(values: &[f64]) -> (f64, f64) {
    let normal = Normal::standard();
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let r = sorted.len() as f64;
    let d = sorted
        .iter()
        .enumerate()
        .map(|(i, &x)| {
            let f = normal.cdf(x);
            (f - i as f64 / r).max((i + 1) as f64 / r - f)
        })
        .fold(0.0, f64::max);
    (d, kolmogorov_sf((r.sqrt() + 0.12 + 0.11 / r.sqrt()) * d))
}

/// Survival function of the Kolmogorov distribution.
fn kolmogorov_sf(x: f64) -> f64 {
    if x < 0.2 {
        return 1.0;
    }
    let s: f64 = (1..=100)
        .map(|k| {
            let k = k as f64;
            let sign = if k as u64 % 2 == 1 { 1.0 } else { -1.0 };
            sign * (-2.0 * k * k * x * x).exp()
        })
        .sum();
    (2.0 * s).clamp(0.0, 1.0)
}
