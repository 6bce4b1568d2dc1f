//! Rejection boundaries on the z statistic `|√n·x̄|`.
//!
//! NHST rejects above a constant `C₁`. A precise-alternative Bayes factor
//! test rejects above `C₂√n + C₃/√n` with `C₂ = |δ|/2`, `C₃ = ln k/|δ|`.
//! A composite (normal-prior) alternative, which is also what mSPRT uses,
//! rejects above a boundary growing like `√ln n`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{self, SufficientStats};
use crate::normal;

/// `C₁ = Φ⁻¹(1 − α/2)`; constant in `n`.
pub fn nhst_boundary(alpha: f64) -> Result<f64> {
    if !(alpha > 0.0 && alpha <= 1.0) {
        return Err(Error::domain(format!("alpha must lie in (0,1], got {alpha}")));
    }
    if alpha == 1.0 {
        return Ok(0.0);
    }
    Ok(normal::quantile(1.0 - alpha / 2.0))
}

/// The constants `(C₂, C₃)` of the precise-alternative boundary.
pub fn precise_constants(delta: f64, k: f64) -> (f64, f64) {
    let d = delta.abs();
    (d / 2.0, k.ln() / d)
}

/// `(|δ|/2)·√n + (ln k/|δ|)/√n`: the z value at which the precise-alternative
/// Bayes factor equals `k`.
pub fn bayes_precise_boundary(n: u64, delta: f64, k: f64) -> Result<f64> {
    if n == 0 {
        return Err(Error::domain("n must be at least 1"));
    }
    if delta == 0.0 || !delta.is_finite() {
        return Err(Error::domain("delta must be finite and nonzero"));
    }
    if !(k > 0.0) || !k.is_finite() {
        return Err(Error::domain("k must be positive"));
    }
    let (c2, c3) = precise_constants(delta, k);
    let rn = (n as f64).sqrt();
    Ok(c2 * rn + c3 / rn)
}

/// Either a boundary value or the marker that `k` is below the smallest
/// Bayes factor the composite test can produce at this `n`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CompositeBoundary {
    Boundary(f64),
    NoBoundary,
}

impl CompositeBoundary {
    pub fn value(&self) -> Option<f64> {
        match self {
            CompositeBoundary::Boundary(z) => Some(*z),
            CompositeBoundary::NoBoundary => None,
        }
    }
}

/// Solves `log_bf_composite = ln k` for `|√n·x̄|`:
/// `√((1 + n·V²)/(n·V²) · (2 ln k + ln(1 + n·V²)))`.
pub fn bayes_composite_boundary(n: u64, v_sq: f64, k: f64) -> Result<CompositeBoundary> {
    if n == 0 {
        return Err(Error::domain("n must be at least 1"));
    }
    if !(v_sq > 0.0) || !v_sq.is_finite() {
        return Err(Error::domain("v_sq must be positive"));
    }
    if !(k > 0.0) || !k.is_finite() {
        return Err(Error::domain("k must be positive"));
    }
    let nv = n as f64 * v_sq;
    let inner = 2.0 * k.ln() + nv.ln_1p();
    if inner < 0.0 {
        return Ok(CompositeBoundary::NoBoundary);
    }
    Ok(CompositeBoundary::Boundary(((1.0 + nv) / nv * inner).sqrt()))
}

/// Log likelihood ratio of the mixture SPRT with a `N(0, v_sq)` mixing
/// distribution; identical to the composite Bayes factor.
pub fn msprt_log_lr(stats: &SufficientStats, v_sq: f64) -> Result<f64> {
    model::log_bf_composite(stats, v_sq)
}

/// mSPRT rejects once the likelihood ratio exceeds `1/α`.
pub fn msprt_threshold(alpha: f64) -> Result<f64> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::domain(format!("alpha must lie in (0,1), got {alpha}")));
    }
    Ok(1.0 / alpha)
}

/// Bayes factor needed to reach posterior odds `(1 − fdr)/fdr` (i.e. a
/// false-discovery probability of `fdr`) from the given prior odds.
pub fn bayes_threshold_for_fdr(prior_odds: f64, fdr: f64) -> Result<f64> {
    if !(fdr > 0.0 && fdr < 1.0) {
        return Err(Error::domain("fdr target must lie in (0,1)"));
    }
    if !(prior_odds > 0.0) {
        return Err(Error::domain("prior odds must be positive"));
    }
    Ok((1.0 - fdr) / fdr / prior_odds)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TestKind {
    Nhst,
    BayesPrecise,
    BayesComposite,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum BoundaryParams {
    Nhst { alpha: f64 },
    Precise { delta: f64, k: f64 },
    Composite { v_sq: f64, k: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundaryCurve {
    pub test_kind: TestKind,
    pub params: BoundaryParams,
    /// `(n, z boundary)`, sorted by `n`; composite points without a boundary
    /// are omitted.
    pub samples: Vec<(u64, f64)>,
}

impl BoundaryCurve {
    pub fn nhst(alpha: f64, grid: &[u64]) -> Result<Self> {
        let c1 = nhst_boundary(alpha)?;
        Ok(BoundaryCurve {
            test_kind: TestKind::Nhst,
            params: BoundaryParams::Nhst { alpha },
            samples: sorted(grid).into_iter().map(|n| (n, c1)).collect(),
        })
    }

    pub fn precise(delta: f64, k: f64, grid: &[u64]) -> Result<Self> {
        let samples = sorted(grid)
            .into_iter()
            .map(|n| Ok((n, bayes_precise_boundary(n, delta, k)?)))
            .collect::<Result<_>>()?;
        Ok(BoundaryCurve {
            test_kind: TestKind::BayesPrecise,
            params: BoundaryParams::Precise { delta, k },
            samples,
        })
    }

    pub fn composite(v_sq: f64, k: f64, grid: &[u64]) -> Result<Self> {
        let mut samples = Vec::new();
        for n in sorted(grid) {
            if let Some(z) = bayes_composite_boundary(n, v_sq, k)?.value() {
                samples.push((n, z));
            }
        }
        Ok(BoundaryCurve {
            test_kind: TestKind::BayesComposite,
            params: BoundaryParams::Composite { v_sq, k },
            samples,
        })
    }
}

fn sorted(grid: &[u64]) -> Vec<u64> {
    let mut g = grid.to_vec();
    g.sort_unstable();
    g.dedup();
    g
}

/// `points` sample sizes spaced evenly in `log10` between `lo` and `hi`.
pub fn log_grid(lo: u64, hi: u64, points: usize) -> Vec<u64> {
    if points <= 1 || lo >= hi {
        return vec![lo.max(1)];
    }
    let (a, b) = ((lo.max(1) as f64).log10(), (hi as f64).log10());
    let step = (b - a) / (points - 1) as f64;
    sorted(
        &(0..points)
            .map(|i| 10f64.powf(a + step * i as f64).round() as u64)
            .collect::<Vec<_>>(),
    )
}

/// One row of the boundary table.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BoundaryRow {
    pub n: u64,
    pub nhst: f64,
    pub bayes_precise: f64,
    pub bayes_composite: Option<f64>,
}

pub fn boundary_table(grid: &[u64], alpha: f64, delta: f64, v_sq: f64, k: f64) -> Result<Vec<BoundaryRow>> {
    let c1 = nhst_boundary(alpha)?;
    sorted(grid)
        .into_iter()
        .map(|n| {
            Ok(BoundaryRow {
                n,
                nhst: c1,
                bayes_precise: bayes_precise_boundary(n, delta, k)?,
                bayes_composite: bayes_composite_boundary(n, v_sq, k)?.value(),
            })
        })
        .collect()
}

/// Writes the table as CSV with columns `n,nhst,bayes_precise,bayes_composite`.
pub fn write_boundary_csv<W: std::io::Write>(rows: &[BoundaryRow], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["n", "nhst", "bayes_precise", "bayes_composite"])?;
    for r in rows {
        w.write_record([
            r.n.to_string(),
            r.nhst.to_string(),
            r.bayes_precise.to_string(),
            r.bayes_composite.map_or("NA".to_string(), |v| v.to_string()),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// One-sample summary whose z statistic sits at `z`.
#[cfg(test)]
pub(crate) fn summary_at_z(n: u64, z: f64) -> model::EffectSummary {
    let nf = n as f64;
    model::EffectSummary {
        mean: z / nf.sqrt(),
        n: nf,
    }
}
