//! Monte Carlo harness for calibration studies.
//!
//! A study simulates an equal number of paths under H0 and H1, monitors each
//! one with the configured stopping rule, and records the Bayes factor at the
//! stopping time. Binning those Bayes factors and comparing the H1:H0 count
//! ratio in each bin against the bin's own Bayes factor is the empirical form
//! of the optional-stopping calibration property.
//!
//! Every run draws from its own ChaCha8 stream keyed by `(seed, run index)`,
//! and results are reduced in run-index order, so the thread count never
//! changes the output.

mod calibration;
mod enumerate;

pub use calibration::{
    calibration_histogram, calibration_violations, default_bin_edges, uniform_bin_edges, write_calibration_csv,
    CalibrationBin, CalibrationCheck, ObservedRatio,
};
pub use enumerate::{enumerate_identity_check, DiscreteModel, IdentityGroup, PathRule, MAX_ENUMERATED_PATHS};

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{AlternativeModel, PriorOdds};
use crate::stopping::{Decision, MonitorConfig, StoppingRule};

/// Ground truth of a simulated run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Hypothesis {
    H0,
    H1,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StudyConfig {
    pub runs_per_hypothesis: u64,
    pub horizon: u64,
    #[serde(default = "one")]
    pub check_every: u64,
    pub model: AlternativeModel,
    pub prior: PriorOdds,
    pub rule: StoppingRule,
    pub reject_threshold_k: f64,
    pub seed: u64,
    pub bin_edges: Vec<f64>,
}

fn one() -> u64 {
    1
}

impl StudyConfig {
    /// Config with even prior odds, the rule's own BF threshold (or 9) as the
    /// rejection threshold, and the default log-BF bins.
    pub fn new(model: AlternativeModel, rule: StoppingRule, horizon: u64, runs_per_hypothesis: u64, seed: u64) -> Self {
        let reject_threshold_k = rule.bf_threshold().unwrap_or(9.0);
        StudyConfig {
            runs_per_hypothesis,
            horizon,
            check_every: 1,
            model,
            prior: PriorOdds::EVEN,
            rule,
            reject_threshold_k,
            seed,
            bin_edges: default_bin_edges(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.runs_per_hypothesis == 0 {
            return Err(Error::validation("runs_per_hypothesis", "must be at least 1"));
        }
        if !(self.reject_threshold_k > 1.0) || !self.reject_threshold_k.is_finite() {
            return Err(Error::validation("reject_threshold_k", "must be finite and > 1"));
        }
        if self.bin_edges.len() < 2 {
            return Err(Error::validation("bin_edges", "need at least two edges"));
        }
        if self.bin_edges.windows(2).any(|w| !(w[0] < w[1])) || self.bin_edges.iter().any(|e| !e.is_finite()) {
            return Err(Error::validation("bin_edges", "must be finite and strictly increasing"));
        }
        self.model.validate()?;
        self.monitor().validate()
    }

    pub fn monitor(&self) -> MonitorConfig {
        MonitorConfig {
            rule: self.rule.clone(),
            horizon: self.horizon,
            check_every: self.check_every,
        }
    }

    pub fn total_runs(&self) -> u64 {
        2 * self.runs_per_hypothesis
    }

    /// Runs `0..R` are H1, runs `R..2R` are H0.
    pub fn truth_of(&self, run_index: u64) -> Hypothesis {
        if run_index < self.runs_per_hypothesis {
            Hypothesis::H1
        } else {
            Hypothesis::H0
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub truth: Hypothesis,
    pub drawn_effect: f64,
    pub stop_time: u64,
    pub log_bf_at_stop: f64,
    pub decision: Decision,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StudyMetrics {
    pub runs_h1: u64,
    pub runs_h0: u64,
    pub rejections_h1: u64,
    pub rejections_h0: u64,
    pub type_i_error: f64,
    pub power: f64,
    /// `None` when nothing was rejected.
    pub fdr: Option<f64>,
    pub early_stop_rate_h1: f64,
    pub early_stop_rate_h0: f64,
    /// Mean stopping time over runs (either truth) that stopped before the horizon.
    pub mean_stop_time_early: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StudyReport {
    pub metrics: StudyMetrics,
    pub calibration: Vec<CalibrationBin>,
    pub records: Vec<RunRecord>,
}

/// Independent RNG stream for one run.
pub fn run_rng(seed: u64, run_index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(run_index);
    rng
}

fn std_normal<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    StandardNormal.sample(rng)
}

/// Draws the effect for one run (zero under H0; `δ`, or a draw from
/// `N(0, V²)`, under H1).
pub fn draw_effect<R: Rng + ?Sized>(truth: Hypothesis, model: &AlternativeModel, rng: &mut R) -> f64 {
    match (truth, model) {
        (Hypothesis::H0, _) => 0.0,
        (Hypothesis::H1, AlternativeModel::Precise { delta }) => *delta,
        (Hypothesis::H1, AlternativeModel::CompositeNormal { v_sq }) => v_sq.sqrt() * std_normal(rng),
    }
}

/// Simulates one path of `horizon` unit-variance observations.
pub fn generate_path<R: Rng + ?Sized>(
    truth: Hypothesis,
    model: &AlternativeModel,
    horizon: u64,
    rng: &mut R,
) -> (f64, Vec<f64>) {
    let effect = draw_effect(truth, model, rng);
    let path = (0..horizon).map(|_| effect + std_normal(rng)).collect();
    (effect, path)
}

/// Maps `f` over `0..n` with rayon, optionally in a dedicated pool of
/// `threads` workers, and collects in index order.
pub fn parallel_runs<T, F>(n: u64, threads: Option<usize>, f: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(u64) -> Result<T> + Sync + Send,
{
    let work = || (0..n).into_par_iter().map(&f).collect::<Result<Vec<T>>>();
    match threads {
        None => work(),
        Some(t) => rayon::ThreadPoolBuilder::new()
            .num_threads(t.max(1))
            .build()
            .map_err(|e| Error::validation("threads", e.to_string()))?
            .install(work),
    }
}

/// Posterior-odds rejection used for study metrics: odds strictly above `k`.
pub fn rejects(record: &RunRecord, prior: PriorOdds, k: f64) -> bool {
    prior.ln() + record.log_bf_at_stop > k.ln()
}

pub fn study_metrics(records: &[RunRecord], horizon: u64, prior: PriorOdds, k: f64) -> StudyMetrics {
    let mut runs = [0u64; 2];
    let mut rej = [0u64; 2];
    let mut early = [0u64; 2];
    let mut early_time_sum = 0u64;
    for r in records {
        let i = match r.truth {
            Hypothesis::H0 => 0,
            Hypothesis::H1 => 1,
        };
        runs[i] += 1;
        if rejects(r, prior, k) {
            rej[i] += 1;
        }
        if r.stop_time < horizon {
            early[i] += 1;
            early_time_sum += r.stop_time;
        }
    }
    let rate = |a: u64, b: u64| if b == 0 { 0.0 } else { a as f64 / b as f64 };
    let total_rej = rej[0] + rej[1];
    let total_early = early[0] + early[1];
    StudyMetrics {
        runs_h1: runs[1],
        runs_h0: runs[0],
        rejections_h1: rej[1],
        rejections_h0: rej[0],
        type_i_error: rate(rej[0], runs[0]),
        power: rate(rej[1], runs[1]),
        fdr: (total_rej > 0).then(|| rej[0] as f64 / total_rej as f64),
        early_stop_rate_h1: rate(early[1], runs[1]),
        early_stop_rate_h0: rate(early[0], runs[0]),
        mean_stop_time_early: (total_early > 0).then(|| early_time_sum as f64 / total_early as f64),
    }
}

impl StudyReport {
    pub fn from_records(cfg: &StudyConfig, records: Vec<RunRecord>) -> Self {
        let metrics = study_metrics(&records, cfg.horizon, cfg.prior, cfg.reject_threshold_k);
        let calibration = calibration_histogram(&records, &cfg.bin_edges);
        StudyReport {
            metrics,
            calibration,
            records,
        }
    }
}

/// Runs a full study on the global rayon pool.
pub fn run_study(cfg: &StudyConfig) -> Result<StudyReport> {
    run_study_with_threads(cfg, None)
}

pub fn run_study_with_threads(cfg: &StudyConfig, threads: Option<usize>) -> Result<StudyReport> {
    cfg.validate()?;
    let monitor = cfg.monitor();
    let records = parallel_runs(cfg.total_runs(), threads, |i| {
        let truth = cfg.truth_of(i);
        let mut rng = run_rng(cfg.seed, i);
        let (effect, path) = generate_path(truth, &cfg.model, cfg.horizon, &mut rng);
        let res = monitor.run(path, &cfg.model, cfg.prior)?;
        Ok(RunRecord {
            truth,
            drawn_effect: effect,
            stop_time: res.stop_time,
            log_bf_at_stop: res.log_bf_at_stop,
            decision: res.decision,
        })
    })?;
    Ok(StudyReport::from_records(cfg, records))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn null_paths_center_on_zero() {
        let mut rng = run_rng(3, 0);
        let model = AlternativeModel::precise(0.2).unwrap();
        let (effect, xs) = generate_path(Hypothesis::H0, &model, 100_000, &mut rng);
        assert_eq!(effect, 0.0);
        let mean = xs.iter().sum::<f64>() / xs.len() as f64;
        assert!(mean.abs() < 0.02);
    }

    #[test]
    fn precise_paths_center_on_delta() {
        let mut rng = run_rng(3, 1);
        let model = AlternativeModel::precise(0.2).unwrap();
        let (effect, xs) = generate_path(Hypothesis::H1, &model, 100_000, &mut rng);
        assert_eq!(effect, 0.2);
        let mean = xs.iter().sum::<f64>() / xs.len() as f64;
        assert!((mean - 0.2).abs() < 0.02);
    }

    #[test]
    fn composite_effects_have_prior_spread() {
        let model = AlternativeModel::composite(0.01).unwrap();
        let draws: Vec<f64> = (0..50_000)
            .map(|i| draw_effect(Hypothesis::H1, &model, &mut run_rng(5, i)))
            .collect();
        let m = draws.iter().sum::<f64>() / draws.len() as f64;
        let var = draws.iter().map(|d| (d - m).powi(2)).sum::<f64>() / (draws.len() - 1) as f64;
        assert!((var.sqrt() / 0.1 - 1.0).abs() < 0.03);
    }

    #[test]
    fn streams_differ_by_index_and_repeat_by_seed() {
        use rand::RngCore;
        assert_ne!(run_rng(1, 0).next_u64(), run_rng(1, 1).next_u64());
        assert_eq!(run_rng(1, 7).next_u64(), run_rng(1, 7).next_u64());
    }

    #[test]
    fn metrics_mark_undefined_fdr() {
        let records = vec![RunRecord {
            truth: Hypothesis::H0,
            drawn_effect: 0.0,
            stop_time: 10,
            log_bf_at_stop: -1.0,
            decision: Decision::InconclusiveAtHorizon,
        }];
        let m = study_metrics(&records, 10, PriorOdds::EVEN, 9.0);
        assert_eq!(m.fdr, None);
        assert_eq!(m.type_i_error, 0.0);
        assert_eq!(m.mean_stop_time_early, None);
        let json = serde_json::to_string(&m).unwrap();
        assert!(json.contains("\"fdr\":null"));
    }

    #[test]
    fn small_study_is_thread_count_invariant() {
        let cfg = StudyConfig::new(
            AlternativeModel::precise(0.2).unwrap(),
            StoppingRule::BfTwoSided { k: 9.0 },
            100,
            2_000,
            42,
        );
        let a = run_study_with_threads(&cfg, Some(1)).unwrap();
        let b = run_study_with_threads(&cfg, Some(4)).unwrap();
        assert_eq!(serde_json::to_string(&a).unwrap(), serde_json::to_string(&b).unwrap());
        let counted: u64 = a.calibration.iter().map(|b| b.count_h0 + b.count_h1).sum();
        assert_eq!(counted, cfg.total_runs());
        assert!(a
            .records
            .iter()
            .filter(|r| r.truth == Hypothesis::H0)
            .all(|r| r.drawn_effect == 0.0));
    }

    #[test]
    fn config_validation() {
        let mut cfg = StudyConfig::new(
            AlternativeModel::precise(0.2).unwrap(),
            StoppingRule::FixedHorizon { n_max: 100 },
            100,
            10,
            1,
        );
        assert!(cfg.validate().is_ok());
        cfg.bin_edges = vec![0.0, 0.0];
        assert!(cfg.validate().is_err());
        cfg.bin_edges = default_bin_edges();
        cfg.runs_per_hypothesis = 0;
        assert!(cfg.validate().is_err());
    }
}
