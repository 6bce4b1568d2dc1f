use std::io::Write;

use serde::{Serialize, Serializer};

use super::{Hypothesis, RunRecord};
use crate::error::Result;

/// `count_h1 / count_h0` with explicit markers for the degenerate cases.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ObservedRatio {
    Finite(f64),
    /// `x / 0` with `x > 0`.
    Infinite,
    /// `0 / 0`.
    Undefined,
}

impl ObservedRatio {
    pub fn from_counts(h1: u64, h0: u64) -> Self {
        match (h1, h0) {
            (0, 0) => ObservedRatio::Undefined,
            (_, 0) => ObservedRatio::Infinite,
            (a, b) => ObservedRatio::Finite(a as f64 / b as f64),
        }
    }

    pub fn value(&self) -> Option<f64> {
        match self {
            ObservedRatio::Finite(v) => Some(*v),
            _ => None,
        }
    }

    fn csv_field(&self) -> String {
        match self {
            ObservedRatio::Finite(v) => v.to_string(),
            ObservedRatio::Infinite => "Inf".into(),
            ObservedRatio::Undefined => "NA".into(),
        }
    }
}

/// Finite ratios serialize as numbers, `x/0` as the string `"Inf"`, `0/0` as `null`.
impl Serialize for ObservedRatio {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            ObservedRatio::Finite(v) => s.serialize_f64(*v),
            ObservedRatio::Infinite => s.serialize_str("Inf"),
            ObservedRatio::Undefined => s.serialize_none(),
        }
    }
}

/// One log-BF bin. The two overflow bins have an open side (`None`) and no center.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CalibrationBin {
    pub bin_lo: Option<f64>,
    pub bin_hi: Option<f64>,
    pub bin_center_log_bf: Option<f64>,
    pub count_h1: u64,
    pub count_h0: u64,
    pub observed_ratio: ObservedRatio,
}

impl CalibrationBin {
    pub fn total(&self) -> u64 {
        self.count_h1 + self.count_h0
    }

    /// Bayes factor at the bin center.
    pub fn center_bf(&self) -> Option<f64> {
        self.bin_center_log_bf.map(f64::exp)
    }

    /// `observed_ratio / center_bf − 1`, when both are finite.
    pub fn relative_error(&self) -> Option<f64> {
        Some(self.observed_ratio.value()? / self.center_bf()? - 1.0)
    }
}

/// `n` uniform bins over `[lo, hi]` in log-BF space (so `n + 1` edges).
pub fn uniform_bin_edges(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    let w = (hi - lo) / n as f64;
    (0..=n).map(|i| if i == n { hi } else { lo + w * i as f64 }).collect()
}

/// 40 uniform bins over `[ln(1/64), ln 64]`.
pub fn default_bin_edges() -> Vec<f64> {
    let l = 64f64.ln();
    uniform_bin_edges(-l, l, 40)
}

/// Histogram of stopping-time log BFs split by ground truth. The result has
/// `edges.len() + 1` bins: an underflow bin, the interior bins (half-open
/// `[lo, hi)`), and an overflow bin.
pub fn calibration_histogram(records: &[RunRecord], edges: &[f64]) -> Vec<CalibrationBin> {
    let nb = edges.len() + 1;
    let mut h1 = vec![0u64; nb];
    let mut h0 = vec![0u64; nb];
    for r in records {
        // index of the first edge strictly greater than the value
        let idx = edges.partition_point(|&e| e <= r.log_bf_at_stop);
        match r.truth {
            Hypothesis::H1 => h1[idx] += 1,
            Hypothesis::H0 => h0[idx] += 1,
        }
    }
    (0..nb)
        .map(|i| {
            let bin_lo = (i > 0).then(|| edges[i - 1]);
            let bin_hi = (i < edges.len()).then(|| edges[i]);
            let bin_center_log_bf = match (bin_lo, bin_hi) {
                (Some(a), Some(b)) => Some(0.5 * (a + b)),
                _ => None,
            };
            CalibrationBin {
                bin_lo,
                bin_hi,
                bin_center_log_bf,
                count_h1: h1[i],
                count_h0: h0[i],
                observed_ratio: ObservedRatio::from_counts(h1[i], h0[i]),
            }
        })
        .collect()
}

/// Writes `bin_lo,bin_hi,bin_center_bf,count_h1,count_h0,observed_ratio`.
/// Bin edges stay in log-BF space; the center is reported as a BF.
pub fn write_calibration_csv<W: Write>(bins: &[CalibrationBin], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record([
        "bin_lo",
        "bin_hi",
        "bin_center_bf",
        "count_h1",
        "count_h0",
        "observed_ratio",
    ])?;
    for b in bins {
        w.write_record([
            b.bin_lo.map_or("-inf".to_string(), |v| v.to_string()),
            b.bin_hi.map_or("inf".to_string(), |v| v.to_string()),
            b.center_bf().map_or(String::new(), |v| v.to_string()),
            b.count_h1.to_string(),
            b.count_h0.to_string(),
            b.observed_ratio.csv_field(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// A bin that breaks a calibration tolerance.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CalibrationCheck {
    pub bin_center_bf: f64,
    pub total: u64,
    pub relative_error: f64,
    pub tolerance: f64,
}

/// Interior bins whose `|observed/center − 1|` exceeds the tolerance of the
/// strictest tier they qualify for. `tiers` pairs a minimum bin count with
/// a tolerance.
pub fn calibration_violations(bins: &[CalibrationBin], tiers: &[(u64, f64)]) -> Vec<CalibrationCheck> {
    let mut out = Vec::new();
    for b in bins {
        let Some(center) = b.center_bf() else { continue };
        let tol = tiers
            .iter()
            .filter(|(min, _)| b.total() >= *min)
            .map(|&(_, t)| t)
            .reduce(f64::min);
        let Some(tolerance) = tol else { continue };
        let relative_error = b.relative_error().unwrap_or(f64::INFINITY);
        if relative_error.abs() > tolerance {
            out.push(CalibrationCheck {
                bin_center_bf: center,
                total: b.total(),
                relative_error,
                tolerance,
            });
        }
    }
    out
}
