//! Learning the prior `(p, V²)` from historical experiments.
//!
//! Each historical experiment contributes an observed effect size `δᵢ` and
//! effective sample size `N_Eᵢ`, with `δᵢ ~ N(μ, 1/N_Eᵢ)`. Under H0 `μ = 0`;
//! under H1 `μ ~ N(0, V²)`. The fit alternates
//!
//! 1. responsibilities `Pᵢ = P(H1 | δᵢ)` under the current parameters,
//! 2. `p ← mean(Pᵢ)`,
//! 3. `V² ← max(WAvg(δᵢ²; Pᵢ) − WAvg(1/N_Eᵢ; Pᵢ), k²·Avg(1/N_E))`,
//!
//! until the parameters stop moving. The floor on `V²` keeps H1 distinct
//! from H0; without it the mixture is not identifiable.

use log::warn;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{composite_log_bf, EffectSummary};
use crate::normal::log_pdf;

const RESP_FLOOR: f64 = 1e-12;

/// One historical experiment.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HistoricalRecord {
    pub delta: f64,
    #[serde(rename = "n_effective")]
    pub n_e: f64,
}

impl HistoricalRecord {
    pub fn validate(&self) -> Result<()> {
        if !self.delta.is_finite() {
            return Err(Error::validation("delta", "must be finite"));
        }
        if !(self.n_e > 0.0) || !self.n_e.is_finite() {
            return Err(Error::validation(
                "n_effective",
                format!("must be positive, got {}", self.n_e),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PriorParams {
    /// Prior probability of H1.
    pub p: f64,
    /// Variance of the effect-size prior under H1.
    pub v_sq: f64,
}

impl PriorParams {
    pub fn v(&self) -> f64 {
        self.v_sq.sqrt()
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.p > 0.0 && self.p < 1.0) {
            return Err(Error::validation("p", format!("must lie in (0,1), got {}", self.p)));
        }
        if !(self.v_sq > 0.0) || !self.v_sq.is_finite() {
            return Err(Error::validation(
                "v_sq",
                format!("must be positive, got {}", self.v_sq),
            ));
        }
        Ok(())
    }
}

/// `P(H1 | δ)` for one record.
pub fn responsibility(rec: &HistoricalRecord, params: &PriorParams) -> f64 {
    let s = EffectSummary {
        mean: rec.delta,
        n: rec.n_e,
    };
    let log_odds = composite_log_bf(&s, params.v_sq) + params.p.ln() - (-params.p).ln_1p();
    if log_odds >= 0.0 {
        1.0 / (1.0 + (-log_odds).exp())
    } else {
        let e = log_odds.exp();
        e / (1.0 + e)
    }
}

/// Observed-data log-likelihood of the two-component mixture.
pub fn log_likelihood(records: &[HistoricalRecord], params: &PriorParams) -> f64 {
    records
        .iter()
        .map(|r| {
            let var0 = 1.0 / r.n_e;
            let a = (-params.p).ln_1p() + log_pdf(r.delta, 0.0, var0);
            let b = params.p.ln() + log_pdf(r.delta, 0.0, var0 + params.v_sq);
            let m = a.max(b);
            m + ((a - m).exp() + (b - m).exp()).ln()
        })
        .sum()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EmOptions {
    pub tol: f64,
    pub max_iter: usize,
    /// Multiplier in the `V²` floor `k²·Avg(1/N_E)`.
    pub k: f64,
}

impl Default for EmOptions {
    fn default() -> Self {
        EmOptions {
            tol: 1e-6,
            max_iter: 1000,
            k: 2.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EmIteration {
    pub p: f64,
    pub v_sq: f64,
    pub mean_responsibility: f64,
    /// Log-likelihood at the parameters after this iteration. Tracked only;
    /// the `V²` step is a moment update and need not increase it.
    pub log_likelihood: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmTrace {
    pub iterations: Vec<EmIteration>,
    pub converged: bool,
    pub n_iter: usize,
    pub lower_bound: f64,
    pub lower_bound_active: bool,
    /// `V²` sits on its floor and `p < 0.01`: the data look like pure H0 and
    /// the fit is close to unidentifiable.
    pub degenerate: bool,
}

/// Compact JSON summary of a fit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmSummary {
    pub p: f64,
    pub v: f64,
    pub v_sq: f64,
    pub iterations: usize,
    pub converged: bool,
    pub lower_bound_active: bool,
}

impl EmSummary {
    pub fn new(params: &PriorParams, trace: &EmTrace) -> Self {
        EmSummary {
            p: params.p,
            v: params.v(),
            v_sq: params.v_sq,
            iterations: trace.n_iter,
            converged: trace.converged,
            lower_bound_active: trace.lower_bound_active,
        }
    }
}

fn check_records(records: &[HistoricalRecord]) -> Result<()> {
    if records.len() < 2 {
        return Err(Error::InsufficientData(format!(
            "prior fitting needs at least 2 records, got {}",
            records.len()
        )));
    }
    records.iter().try_for_each(HistoricalRecord::validate)
}

/// `k²·Avg(1/N_E)` over all records.
pub fn v_sq_lower_bound(records: &[HistoricalRecord], k: f64) -> f64 {
    let avg_inv = records.iter().map(|r| 1.0 / r.n_e).sum::<f64>() / records.len() as f64;
    k * k * avg_inv
}

/// Moment-based starting point: `p = 0.5`, `V² = max(Var(δ) − Avg(1/N_E), floor)`.
pub fn default_init(records: &[HistoricalRecord], k: f64) -> Result<PriorParams> {
    check_records(records)?;
    let n = records.len() as f64;
    let mean = records.iter().map(|r| r.delta).sum::<f64>() / n;
    let var = records.iter().map(|r| (r.delta - mean).powi(2)).sum::<f64>() / (n - 1.0);
    let avg_inv = records.iter().map(|r| 1.0 / r.n_e).sum::<f64>() / n;
    Ok(PriorParams {
        p: 0.5,
        v_sq: (var - avg_inv).max(v_sq_lower_bound(records, k)),
    })
}

fn em_step(records: &[HistoricalRecord], params: &PriorParams, lower_bound: f64) -> (PriorParams, f64) {
    let mut sum_p = 0.0;
    let mut sum_pd2 = 0.0;
    let mut sum_pinv = 0.0;
    for r in records {
        let w = responsibility(r, params).clamp(RESP_FLOOR, 1.0 - RESP_FLOOR);
        sum_p += w;
        sum_pd2 += w * r.delta * r.delta;
        sum_pinv += w / r.n_e;
    }
    let mean_resp = sum_p / records.len() as f64;
    let v_sq = ((sum_pd2 - sum_pinv) / sum_p).max(lower_bound);
    (PriorParams { p: mean_resp, v_sq }, mean_resp)
}

/// Fits `(p, V²)` by EM starting from `init`.
pub fn em_fit(records: &[HistoricalRecord], init: PriorParams, opts: &EmOptions) -> Result<(PriorParams, EmTrace)> {
    check_records(records)?;
    init.validate()?;
    if !(opts.tol > 0.0) {
        return Err(Error::validation("tol", "must be positive"));
    }
    if !(opts.k > 0.0) || !opts.k.is_finite() {
        return Err(Error::validation("k", "must be positive"));
    }
    if opts.max_iter == 0 {
        return Err(Error::validation("max_iter", "must be at least 1"));
    }

    let lower_bound = v_sq_lower_bound(records, opts.k);
    let mut params = PriorParams {
        p: init.p,
        v_sq: init.v_sq.max(lower_bound),
    };
    let mut iterations = Vec::new();
    let mut converged = false;
    for _ in 0..opts.max_iter {
        let (next, mean_responsibility) = em_step(records, &params, lower_bound);
        iterations.push(EmIteration {
            p: next.p,
            v_sq: next.v_sq,
            mean_responsibility,
            log_likelihood: log_likelihood(records, &next),
        });
        let moved = (next.p - params.p).abs().max((next.v_sq - params.v_sq).abs());
        params = next;
        if moved < opts.tol {
            converged = true;
            break;
        }
    }

    let lower_bound_active = params.v_sq <= lower_bound;
    let degenerate = lower_bound_active && params.p < 0.01;
    if degenerate {
        warn!(
            "prior fit is near-unidentifiable: V² is pinned at its floor {lower_bound:.3e} and p = {:.3e}",
            params.p
        );
    }
    let trace = EmTrace {
        n_iter: iterations.len(),
        iterations,
        converged,
        lower_bound,
        lower_bound_active,
        degenerate,
    };
    Ok((params, trace))
}

/// [`em_fit`] from [`default_init`].
pub fn em_fit_default(records: &[HistoricalRecord], opts: &EmOptions) -> Result<(PriorParams, EmTrace)> {
    let init = default_init(records, opts.k)?;
    em_fit(records, init, opts)
}

/// Draws `n` historical records: each experiment is H1 with probability `p`
/// (effect `~ N(0, v²)`, else zero), `N_E ~ U[lo, hi)`, and the observed
/// effect is the true one plus `N(0, 1/N_E)` noise.
pub fn synthetic_history<R: Rng + ?Sized>(
    rng: &mut R,
    n: usize,
    p: f64,
    v: f64,
    n_e_range: (f64, f64),
) -> Vec<HistoricalRecord> {
    (0..n)
        .map(|_| {
            let n_e: f64 = rng.random_range(n_e_range.0..n_e_range.1);
            let mu = if rng.random::<f64>() < p {
                v * <StandardNormal as Distribution<f64>>::sample(&StandardNormal, rng)
            } else {
                0.0
            };
            let z: f64 = StandardNormal.sample(rng);
            HistoricalRecord {
                delta: mu + z / n_e.sqrt(),
                n_e,
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn synthetic(seed: u64, n: usize, p: f64, v: f64) -> Vec<HistoricalRecord> {
        synthetic_history(&mut ChaCha8Rng::seed_from_u64(seed), n, p, v, (500.0, 5000.0))
    }

    fn pdf(x: f64, var: f64) -> f64 {
        (-x * x / (2.0 * var)).exp() / (2.0 * std::f64::consts::PI * var).sqrt()
    }

    #[test]
    fn responsibility_at_origin_is_below_prior() {
        for &(n_e, v_sq, p) in &[(100.0, 0.01, 0.3), (5000.0, 1e-4, 0.8), (10.0, 1.0, 0.05)] {
            let r = responsibility(&HistoricalRecord { delta: 0.0, n_e }, &PriorParams { p, v_sq });
            assert!(r < p);
        }
    }

    #[test]
    fn responsibility_matches_density_oracle() {
        let n_e = 400.0;
        let params = PriorParams {
            p: 0.5,
            v_sq: 1.0 / n_e,
        };
        let odds = pdf(0.0, 1.0 / n_e + params.v_sq) / pdf(0.0, 1.0 / n_e);
        let oracle = odds / (1.0 + odds);
        let r = responsibility(&HistoricalRecord { delta: 0.0, n_e }, &params);
        assert!((r - oracle).abs() < 1e-14);
        let inv_sqrt2 = std::f64::consts::FRAC_1_SQRT_2;
        assert!((r - inv_sqrt2 / (1.0 + inv_sqrt2)).abs() < 1e-14);
        assert!((r - 0.414_213_562_373_095).abs() < 1e-12);
    }

    #[test]
    fn responsibility_follows_dominant_prior() {
        let rec = HistoricalRecord {
            delta: -0.03,
            n_e: 2000.0,
        };
        let r = responsibility(
            &rec,
            &PriorParams {
                p: 1.0 - 1e-12,
                v_sq: 0.01,
            },
        );
        assert!(r > 1.0 - 1e-9);
    }

    #[test]
    fn paper_floor_with_k_two() {
        let recs = vec![
            HistoricalRecord {
                delta: 0.0,
                n_e: 1000.0,
            },
            HistoricalRecord {
                delta: 0.0,
                n_e: 1000.0,
            },
        ];
        assert!((v_sq_lower_bound(&recs, 2.0) - 0.004).abs() < 1e-15);
    }

    #[test]
    fn recovers_known_prior() {
        let recs = synthetic(1, 10_000, 0.2, 0.1);
        let (fit, trace) = em_fit_default(&recs, &EmOptions::default()).unwrap();
        assert!(trace.converged);
        assert!((fit.p - 0.2).abs() < 0.03, "p = {}", fit.p);
        assert!((fit.v() / 0.1 - 1.0).abs() < 0.15, "v = {}", fit.v());
        assert!(!trace.lower_bound_active);
    }

    #[test]
    fn all_null_history_pins_floor() {
        let recs = synthetic(2, 5_000, 0.0, 0.1);
        let (fit, trace) = em_fit_default(&recs, &EmOptions::default()).unwrap();
        assert!(trace.lower_bound_active);
        assert_eq!(fit.v_sq, v_sq_lower_bound(&recs, 2.0));
    }

    #[test]
    fn zero_effects_are_flagged_degenerate() {
        let recs = vec![HistoricalRecord { delta: 0.0, n_e: 800.0 }; 50];
        let (fit, trace) = em_fit_default(&recs, &EmOptions::default()).unwrap();
        assert!(trace.converged);
        assert!(trace.degenerate);
        assert!(fit.p < 0.01 && fit.p > 0.0);
        assert!((fit.v_sq - 4.0 / 800.0).abs() < 1e-15);
    }

    #[test]
    fn too_few_records() {
        let one = [HistoricalRecord { delta: 0.1, n_e: 10.0 }];
        assert!(matches!(
            em_fit_default(&one, &EmOptions::default()),
            Err(Error::InsufficientData(_))
        ));
        assert!(matches!(
            em_fit_default(&[], &EmOptions::default()),
            Err(Error::InsufficientData(_))
        ));
        let bad = [
            HistoricalRecord { delta: 0.1, n_e: 0.0 },
            HistoricalRecord { delta: 0.1, n_e: 10.0 },
        ];
        assert!(em_fit_default(&bad, &EmOptions::default()).is_err());
    }

    #[test]
    fn p_update_maximizes_expected_complete_loglik() {
        let recs = synthetic(3, 2_000, 0.3, 0.1);
        let params = PriorParams { p: 0.4, v_sq: 0.02 };
        let w: Vec<f64> = recs.iter().map(|r| responsibility(r, &params)).collect();
        let q = |p: f64| {
            w.iter()
                .map(|&wi| wi * p.ln() + (1.0 - wi) * (1.0 - p).ln())
                .sum::<f64>()
        };
        let p_star = w.iter().sum::<f64>() / w.len() as f64;
        for eps in [1e-3, 1e-2] {
            assert!(q(p_star) > q(p_star + eps));
            assert!(q(p_star) > q(p_star - eps));
        }
        let (next, _) = em_step(&recs, &params, 0.0);
        assert!((next.p - p_star).abs() < 1e-12);
    }

    #[test]
    fn converged_fit_is_a_fixed_point() {
        let recs = synthetic(4, 3_000, 0.25, 0.08);
        let opts = EmOptions::default();
        let (fit, trace) = em_fit_default(&recs, &opts).unwrap();
        let (again, _) = em_step(&recs, &fit, trace.lower_bound);
        assert!((again.p - fit.p).abs() < opts.tol);
        assert!((again.v_sq - fit.v_sq).abs() < opts.tol);
    }

    #[test]
    fn summary_json_fields() {
        let recs = synthetic(5, 500, 0.3, 0.1);
        let (fit, trace) = em_fit_default(&recs, &EmOptions::default()).unwrap();
        let v: serde_json::Value = serde_json::to_value(EmSummary::new(&fit, &trace)).unwrap();
        for key in ["p", "v", "v_sq", "iterations", "converged", "lower_bound_active"] {
            assert!(v.get(key).is_some(), "missing {key}");
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(16))]

        #[test]
        fn iterates_stay_in_range(seed in 0u64..10_000, p in 0.0f64..0.6, k in 0.5f64..3.0) {
            let recs = synthetic(seed, 300, p, 0.1);
            let opts = EmOptions { k, ..EmOptions::default() };
            let (_, trace) = em_fit_default(&recs, &opts).unwrap();
            for it in &trace.iterations {
                prop_assert!(it.p > 0.0 && it.p < 1.0);
                prop_assert!(it.v_sq >= trace.lower_bound);
            }
        }

        #[test]
        fn record_order_is_irrelevant(seed in 0u64..10_000) {
            let recs = synthetic(seed, 200, 0.3, 0.1);
            let mut rev = recs.clone();
            rev.reverse();
            let (a, _) = em_fit_default(&recs, &EmOptions::default()).unwrap();
            let (b, _) = em_fit_default(&rev, &EmOptions::default()).unwrap();
            prop_assert!((a.p - b.p).abs() < 1e-9);
            prop_assert!((a.v_sq - b.v_sq).abs() < 1e-9);
        }
    }
}
