//! The probability model: Bayes factors for precise and composite
//! alternatives, posterior odds, and the reduction of a two-sample
//! comparison to an equivalent one-sample test.
//!
//! Observations are assumed to have unit variance. Raw metric data must be
//! routed through [`reduce_two_sample`] first, which rescales the mean
//! difference by the pooled standard deviation. Bayes factors are carried as
//! natural logs everywhere; only [`posterior_odds`] exponentiates.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Running count, sum, and sum of squares of one observation stream.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct SufficientStats {
    pub n: u64,
    pub sum: f64,
    pub sum_sq: f64,
}

impl SufficientStats {
    pub const EMPTY: SufficientStats = SufficientStats {
        n: 0,
        sum: 0.0,
        sum_sq: 0.0,
    };

    pub fn from_slice(xs: &[f64]) -> Self {
        xs.iter().fold(Self::EMPTY, |s, &x| s.update(x))
    }

    /// Returns the stats after one more observation; `self` is unchanged.
    #[must_use]
    pub fn update(&self, x: f64) -> Self {
        SufficientStats {
            n: self.n + 1,
            sum: self.sum + x,
            sum_sq: self.sum_sq + x * x,
        }
    }

    pub fn mean(&self) -> Option<f64> {
        (self.n > 0).then(|| self.sum / self.n as f64)
    }

    /// One-sample z statistic `mean·√n` under unit variance.
    pub fn z(&self) -> Option<f64> {
        self.mean().map(|m| m * (self.n as f64).sqrt())
    }

    pub fn summary(&self) -> Result<EffectSummary> {
        let mean = self
            .mean()
            .ok_or(Error::UndefinedStatistics("no observations (n = 0)"))?;
        Ok(EffectSummary { mean, n: self.n as f64 })
    }
}

/// A one-sample view of the data: the observed effect (mean of unit-variance
/// observations) and the (possibly fractional) sample size behind it.
///
/// For a two-sample comparison `mean` is the effect size and `n` the
/// effective sample size.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EffectSummary {
    pub mean: f64,
    pub n: f64,
}

impl EffectSummary {
    pub fn new(mean: f64, n: f64) -> Result<Self> {
        if !(n > 0.0) || !n.is_finite() {
            return Err(Error::domain(format!("sample size must be positive, got {n}")));
        }
        if !mean.is_finite() {
            return Err(Error::domain("effect must be finite"));
        }
        Ok(EffectSummary { mean, n })
    }

    pub fn z(&self) -> f64 {
        self.mean * self.n.sqrt()
    }
}

/// What the alternative hypothesis says about the mean.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum AlternativeModel {
    /// `μ = delta` under H1.
    Precise { delta: f64 },
    /// `μ ~ N(0, v_sq)` under H1.
    CompositeNormal { v_sq: f64 },
}

impl AlternativeModel {
    pub fn precise(delta: f64) -> Result<Self> {
        let m = AlternativeModel::Precise { delta };
        m.validate()?;
        Ok(m)
    }

    pub fn composite(v_sq: f64) -> Result<Self> {
        let m = AlternativeModel::CompositeNormal { v_sq };
        m.validate()?;
        Ok(m)
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            AlternativeModel::Precise { delta } if delta == 0.0 || !delta.is_finite() => Err(Error::validation(
                "delta",
                "precise alternative needs a finite nonzero effect",
            )),
            AlternativeModel::CompositeNormal { v_sq } if !(v_sq > 0.0) || !v_sq.is_finite() => {
                Err(Error::validation("v_sq", "prior variance must be positive and finite"))
            }
            _ => Ok(()),
        }
    }

    /// Natural-log Bayes factor of H1 against H0 for the given summary.
    pub fn log_bf(&self, s: &EffectSummary) -> f64 {
        match *self {
            AlternativeModel::Precise { delta } => precise_log_bf(s, delta),
            AlternativeModel::CompositeNormal { v_sq } => composite_log_bf(s, v_sq),
        }
    }
}

pub(crate) fn precise_log_bf(s: &EffectSummary, delta: f64) -> f64 {
    0.5 * s.n * delta * (2.0 * s.mean - delta)
}

/// `ln N(m; 0, v + 1/n) − ln N(m; 0, 1/n)` with the variance ratio folded
/// into `ln_1p` so that tiny `n·v` does not cancel.
pub(crate) fn composite_log_bf(s: &EffectSummary, v_sq: f64) -> f64 {
    let nv = s.n * v_sq;
    -0.5 * nv.ln_1p() + 0.5 * s.mean * s.mean * s.n * nv / (1.0 + nv)
}

/// Log Bayes factor for a precise alternative `μ = delta`.
pub fn log_bf_precise(stats: &SufficientStats, delta: f64) -> Result<f64> {
    let s = stats.summary()?;
    if !delta.is_finite() {
        return Err(Error::domain("delta must be finite"));
    }
    Ok(precise_log_bf(&s, delta))
}

/// Log Bayes factor for the composite alternative `μ ~ N(0, v_sq)`.
pub fn log_bf_composite(stats: &SufficientStats, v_sq: f64) -> Result<f64> {
    let s = stats.summary()?;
    if !(v_sq > 0.0) || !v_sq.is_finite() {
        return Err(Error::domain(format!("v_sq must be positive, got {v_sq}")));
    }
    Ok(composite_log_bf(&s, v_sq))
}

/// Prior odds `P(H1)/P(H0)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "f64", into = "f64")]
pub struct PriorOdds(f64);

impl PriorOdds {
    pub const EVEN: PriorOdds = PriorOdds(1.0);

    pub fn new(odds: f64) -> Result<Self> {
        if odds > 0.0 && odds.is_finite() {
            Ok(PriorOdds(odds))
        } else {
            Err(Error::validation(
                "prior_odds",
                format!("must be positive and finite, got {odds}"),
            ))
        }
    }

    /// Odds from a prior probability of H1.
    pub fn from_probability(p: f64) -> Result<Self> {
        if p > 0.0 && p < 1.0 {
            Self::new(p / (1.0 - p))
        } else {
            Err(Error::validation(
                "p",
                format!("prior probability must lie in (0,1), got {p}"),
            ))
        }
    }

    pub fn value(self) -> f64 {
        self.0
    }

    pub fn ln(self) -> f64 {
        self.0.ln()
    }
}

impl Default for PriorOdds {
    fn default() -> Self {
        PriorOdds::EVEN
    }
}

impl TryFrom<f64> for PriorOdds {
    type Error = Error;
    fn try_from(v: f64) -> Result<Self> {
        PriorOdds::new(v)
    }
}

impl From<PriorOdds> for f64 {
    fn from(p: PriorOdds) -> f64 {
        p.0
    }
}

/// Posterior odds with a flag set when the value had to be clamped to the
/// finite positive range.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PosteriorOdds {
    pub value: f64,
    pub log_value: f64,
    pub saturated: bool,
}

/// Posterior odds = prior odds × Bayes factor.
pub fn posterior_odds(prior: PriorOdds, log_bf: f64) -> PosteriorOdds {
    let log_value = prior.ln() + log_bf;
    let raw = log_value.exp();
    if raw.is_nan() {
        // only reachable with a NaN log BF
        return PosteriorOdds {
            value: f64::NAN,
            log_value,
            saturated: false,
        };
    }
    if raw > f64::MAX {
        PosteriorOdds {
            value: f64::MAX,
            log_value,
            saturated: true,
        }
    } else if raw < f64::MIN_POSITIVE {
        PosteriorOdds {
            value: f64::MIN_POSITIVE,
            log_value,
            saturated: true,
        }
    } else {
        PosteriorOdds {
            value: raw,
            log_value,
            saturated: false,
        }
    }
}

/// `P(H0 | data) = 1 / (K + 1)` for posterior odds `K`.
pub fn false_discovery_prob(post_odds: f64) -> Result<f64> {
    if post_odds > 0.0 {
        Ok(1.0 / (post_odds + 1.0))
    } else {
        Err(Error::domain(format!(
            "posterior odds must be positive, got {post_odds}"
        )))
    }
}

/// Same quantity from log posterior odds, stable at both extremes.
pub fn false_discovery_prob_from_log(log_post_odds: f64) -> f64 {
    // 1/(e^x + 1) = logistic(-x)
    if log_post_odds >= 0.0 {
        let e = (-log_post_odds).exp();
        e / (1.0 + e)
    } else {
        1.0 / (1.0 + log_post_odds.exp())
    }
}

/// Effective sample size `1/(1/n_t + 1/n_c)`.
pub fn effective_sample_size(n_t: u64, n_c: u64) -> Result<f64> {
    if n_t == 0 || n_c == 0 {
        return Err(Error::domain("group sizes must be at least 1"));
    }
    let (a, b) = (n_t as f64, n_c as f64);
    Ok(a * b / (a + b))
}

/// Summary statistics of a treatment/control comparison.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TwoSampleSummary {
    pub mean_t: f64,
    pub mean_c: f64,
    pub var_t: f64,
    pub var_c: f64,
    pub n_t: u64,
    pub n_c: u64,
}

/// Result of [`reduce_two_sample`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReducedSample {
    /// Effect size: mean difference over pooled standard deviation.
    pub delta: f64,
    pub n_e: f64,
    /// Raw mean difference.
    pub diff: f64,
    pub pooled_var: f64,
}

impl ReducedSample {
    pub fn summary(&self) -> EffectSummary {
        EffectSummary {
            mean: self.delta,
            n: self.n_e,
        }
    }

    /// One-sample z statistic; equals the two-sample Wald statistic.
    pub fn z(&self) -> f64 {
        self.delta * self.n_e.sqrt()
    }
}

/// Rewrites a two-sample comparison as a one-sample test with unit variance.
///
/// The pooled variance satisfies `σ²/N_E = σ_T²/N_T + σ_C²/N_C`, with the
/// sample variances treated as known.
pub fn reduce_two_sample(s: &TwoSampleSummary) -> Result<ReducedSample> {
    let n_e = effective_sample_size(s.n_t, s.n_c)?;
    if !(s.var_t >= 0.0) || !(s.var_c >= 0.0) {
        return Err(Error::domain("variances must be nonnegative"));
    }
    let se_sq = s.var_t / s.n_t as f64 + s.var_c / s.n_c as f64;
    if se_sq <= 0.0 {
        return Err(Error::DegenerateData(
            "both group variances are zero; effect size is undefined".into(),
        ));
    }
    let pooled_var = n_e * se_sq;
    let diff = s.mean_t - s.mean_c;
    Ok(ReducedSample {
        delta: diff / pooled_var.sqrt(),
        n_e,
        diff,
        pooled_var,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::normal::log_pdf;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn stats_with_mean(n: u64, mean: f64) -> SufficientStats {
        SufficientStats {
            n,
            sum: mean * n as f64,
            sum_sq: mean * mean * n as f64 + 1.0,
        }
    }

    /// Independent oracle: ratio of normal densities for the sample mean.
    fn density_ratio_precise(n: f64, mean: f64, delta: f64) -> f64 {
        let pdf = |x: f64, mu: f64, var: f64| {
            (-(x - mu).powi(2) / (2.0 * var)).exp() / (2.0 * std::f64::consts::PI * var).sqrt()
        };
        pdf(mean, delta, 1.0 / n) / pdf(mean, 0.0, 1.0 / n)
    }

    #[test]
    fn precise_midpoint_is_neutral() {
        let lb = log_bf_precise(&stats_with_mean(100, 0.1), 0.2).unwrap();
        assert!(lb.abs() < 1e-15);
    }

    #[test]
    fn precise_at_delta() {
        let lb = log_bf_precise(&stats_with_mean(100, 0.2), 0.2).unwrap();
        assert!((lb - 2.0).abs() < 1e-12);
        let oracle = density_ratio_precise(100.0, 0.2, 0.2);
        assert!((lb.exp() / oracle - 1.0).abs() < 1e-10);
        assert!((oracle - 7.389_056_098_930_65).abs() < 1e-9);
    }

    #[test]
    fn empty_stats_are_rejected() {
        assert!(matches!(
            log_bf_precise(&SufficientStats::EMPTY, 0.2),
            Err(Error::UndefinedStatistics(_))
        ));
        assert!(log_bf_composite(&SufficientStats::EMPTY, 0.01).is_err());
        assert!(log_bf_composite(&stats_with_mean(10, 0.0), 0.0).is_err());
        assert!(log_bf_composite(&stats_with_mean(10, 0.0), -1.0).is_err());
    }

    #[test]
    fn composite_at_origin() {
        let lb = log_bf_composite(&stats_with_mean(1000, 0.0), 0.01).unwrap();
        let oracle = log_pdf(0.0, 0.0, 0.01 + 0.001) - log_pdf(0.0, 0.0, 0.001);
        assert!((lb - oracle).abs() < 1e-12);
        assert!((lb - (-1.198_947_636_399_185_3)).abs() < 1e-12);
    }

    #[test]
    fn composite_positive_evidence() {
        let lb = log_bf_composite(&stats_with_mean(1000, 0.1), 0.01).unwrap();
        let expected = 0.5 * (1.0f64 / 11.0).ln() + (0.01 / 2.0) * (1000.0 - 1000.0 / 11.0);
        assert!(lb > 0.0);
        assert!((lb - expected).abs() < 1e-10);
    }

    #[test]
    fn composite_vanishing_prior_variance() {
        let s = stats_with_mean(50, 0.7);
        let lb = log_bf_composite(&s, 1e-300).unwrap();
        assert!(lb.abs() < 1e-290);
    }

    #[test]
    fn composite_huge_mean_stays_finite() {
        let lb = log_bf_composite(&stats_with_mean(1000, 1e6), 0.01).unwrap();
        assert!(lb.is_finite() && lb > 1e12);
    }

    #[test]
    fn bf_grid_agrees_with_density_oracle() {
        for &n in &[1u64, 10, 100, 1000] {
            for i in 0..=20 {
                let mean = -1.0 + 0.1 * i as f64;
                let s = stats_with_mean(n, mean);
                for &delta in &[-0.5, -0.1, 0.05, 0.2, 0.7] {
                    let lb = log_bf_precise(&s, delta).unwrap();
                    let oracle = log_pdf(mean, delta, 1.0 / n as f64) - log_pdf(mean, 0.0, 1.0 / n as f64);
                    // compare exponentiated values in relative terms
                    assert!(((lb - oracle).exp() - 1.0).abs() < 1e-10, "n={n} m={mean} d={delta}");
                }
                for &v in &[1e-4, 0.01, 0.25, 1.0] {
                    let lb = log_bf_composite(&s, v).unwrap();
                    let var0 = 1.0 / n as f64;
                    let oracle = log_pdf(mean, 0.0, v + var0) - log_pdf(mean, 0.0, var0);
                    assert!(((lb - oracle).exp() - 1.0).abs() < 1e-10, "n={n} m={mean} v={v}");
                }
            }
        }
    }

    #[test]
    fn posterior_odds_examples() {
        assert_eq!(posterior_odds(PriorOdds::EVEN, 0.0).value, 1.0);
        assert!((posterior_odds(PriorOdds::EVEN, 9f64.ln()).value - 9.0).abs() < 1e-12);
        let p = PriorOdds::new(0.25).unwrap();
        assert!((posterior_odds(p, 9f64.ln()).value - 2.25).abs() < 1e-12);
    }

    #[test]
    fn posterior_odds_saturates() {
        let hi = posterior_odds(PriorOdds::EVEN, 1e4);
        assert!(hi.saturated && hi.value == f64::MAX);
        let lo = posterior_odds(PriorOdds::EVEN, -1e4);
        assert!(lo.saturated && lo.value > 0.0);
        assert!(!posterior_odds(PriorOdds::EVEN, 700.0).saturated);
    }

    #[test]
    fn prior_odds_validation() {
        assert!(PriorOdds::new(0.0).is_err());
        assert!(PriorOdds::new(f64::INFINITY).is_err());
        assert!((PriorOdds::from_probability(0.2).unwrap().value() - 0.25).abs() < 1e-15);
        assert!(serde_json::from_str::<PriorOdds>("-1.0").is_err());
    }

    #[test]
    fn false_discovery_examples() {
        assert!((false_discovery_prob(9.0).unwrap() - 0.1).abs() < 1e-15);
        assert_eq!(false_discovery_prob(1.0).unwrap(), 0.5);
        assert!((false_discovery_prob(1.0 / 9.0).unwrap() - 0.9).abs() < 1e-15);
        assert!(false_discovery_prob(0.0).is_err());
        assert!(false_discovery_prob(-2.0).is_err());
        assert!((false_discovery_prob_from_log(9f64.ln()) - 0.1).abs() < 1e-15);
        assert!(false_discovery_prob_from_log(-800.0) == 1.0);
        assert!(false_discovery_prob_from_log(700.0) > 0.0);
        assert!(false_discovery_prob_from_log(800.0) >= 0.0);
    }

    #[test]
    fn effective_sample_size_examples() {
        assert_eq!(effective_sample_size(100, 100).unwrap(), 50.0);
        assert_eq!(effective_sample_size(1, 1).unwrap(), 0.5);
        assert!((effective_sample_size(100, 400).unwrap() - 80.0).abs() < 1e-12);
        assert!(effective_sample_size(0, 5).is_err());
    }

    #[test]
    fn reduce_two_sample_example() {
        let r = reduce_two_sample(&TwoSampleSummary {
            mean_t: 1.2,
            mean_c: 1.0,
            var_t: 1.0,
            var_c: 1.0,
            n_t: 100,
            n_c: 100,
        })
        .unwrap();
        assert!((r.diff - 0.2).abs() < 1e-12);
        assert_eq!(r.n_e, 50.0);
        assert!((r.pooled_var - 1.0).abs() < 1e-12);
        assert!((r.delta - 0.2).abs() < 1e-12);
    }

    #[test]
    fn reduce_two_sample_null_and_degenerate() {
        let mut s = TwoSampleSummary {
            mean_t: 3.0,
            mean_c: 3.0,
            var_t: 7.0,
            var_c: 0.5,
            n_t: 12,
            n_c: 40,
        };
        assert_eq!(reduce_two_sample(&s).unwrap().delta, 0.0);
        s.var_t = 0.0;
        s.var_c = 0.0;
        assert!(matches!(reduce_two_sample(&s), Err(Error::DegenerateData(_))));
    }

    #[test]
    fn reduction_reproduces_wald_statistic() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..20 {
            let s = TwoSampleSummary {
                mean_t: rng.random_range(-5.0..5.0),
                mean_c: rng.random_range(-5.0..5.0),
                var_t: rng.random_range(0.01..20.0),
                var_c: rng.random_range(0.01..20.0),
                n_t: rng.random_range(1..5000),
                n_c: rng.random_range(1..5000),
            };
            let wald = (s.mean_t - s.mean_c) / (s.var_t / s.n_t as f64 + s.var_c / s.n_c as f64).sqrt();
            let z = reduce_two_sample(&s).unwrap().z();
            assert!((z / wald - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn update_examples() {
        let s = SufficientStats::EMPTY.update(2.0);
        assert_eq!(
            s,
            SufficientStats {
                n: 1,
                sum: 2.0,
                sum_sq: 4.0
            }
        );
        let xs = [1.0, 2.0, 4.0, -3.0];
        let folded = SufficientStats::from_slice(&xs);
        assert_eq!(folded.mean().unwrap(), 1.0);
        assert_eq!(SufficientStats::EMPTY.mean(), None);
    }

    #[test]
    fn model_validation() {
        assert!(AlternativeModel::precise(0.0).is_err());
        assert!(AlternativeModel::composite(0.0).is_err());
        assert!(AlternativeModel::precise(-0.3).is_ok());
    }

    proptest! {
        #[test]
        fn precise_monotone_in_mean(n in 1u64..5000, m in -2.0f64..2.0, dm in 1e-6f64..1.0, delta in 0.01f64..2.0) {
            let a = log_bf_precise(&stats_with_mean(n, m), delta).unwrap();
            let b = log_bf_precise(&stats_with_mean(n, m + dm), delta).unwrap();
            prop_assert!(b > a);
            let c = log_bf_precise(&stats_with_mean(n, m), -delta).unwrap();
            let d = log_bf_precise(&stats_with_mean(n, m + dm), -delta).unwrap();
            prop_assert!(d < c);
        }

        #[test]
        fn precise_zero_at_half_delta(n in 1u64..100_000, delta in -3.0f64..3.0) {
            let s = SufficientStats { n, sum: delta / 2.0 * n as f64, sum_sq: 0.0 };
            let lb = log_bf_precise(&s, delta).unwrap();
            prop_assert!(lb.abs() <= 1e-12 * (n as f64) * delta * delta + 1e-300);
        }

        #[test]
        fn composite_favors_null_at_origin(n in 1u64..1_000_000, v in 1e-8f64..10.0) {
            let lb = log_bf_composite(&stats_with_mean(n, 0.0), v).unwrap();
            prop_assert!(lb < 0.0);
        }

        #[test]
        fn even_prior_identity(b in -50.0f64..50.0, k in 0.01f64..1000.0) {
            prop_assert!((posterior_odds(PriorOdds::EVEN, b).value / b.exp() - 1.0).abs() < 1e-12);
            let fdp = false_discovery_prob(posterior_odds(PriorOdds::EVEN, k.ln()).value).unwrap();
            prop_assert!((fdp - 1.0 / (k + 1.0)).abs() < 1e-12);
        }

        #[test]
        fn update_order_irrelevant(mut xs in proptest::collection::vec(-100.0f64..100.0, 1..50)) {
            let a = SufficientStats::from_slice(&xs);
            xs.reverse();
            let b = SufficientStats::from_slice(&xs);
            prop_assert_eq!(a.n, b.n);
            prop_assert!((a.sum - b.sum).abs() < 1e-9);
            prop_assert!((a.sum_sq - b.sum_sq).abs() < 1e-7);
            prop_assert!(a.sum_sq * a.n as f64 >= a.sum * a.sum * (1.0 - 1e-12));
        }
    }
}
