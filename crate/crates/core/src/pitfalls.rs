//! Demonstrations of three ways to misuse sequential Bayes factors, each run
//! next to the proper procedure on the same simulated paths.
//!
//! * Re-analysis: a fixed-horizon test that fails to reject is re-scanned
//!   with continuous monitoring on the same data.
//! * Optimal stopping: the reported stopping time is the argmax of the Bayes
//!   factor over the whole path.
//! * Continuous testing until win: a test is repeated on fresh data until
//!   one replication's own Bayes factor clears `k`. The corrected version
//!   multiplies the per-replication Bayes factors together.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{AlternativeModel, EffectSummary};
use crate::simulate::{
    calibration_histogram, enumerate_identity_check, generate_path, parallel_runs, rejects, run_rng,
    run_study_with_threads, study_metrics, CalibrationBin, DiscreteModel, Hypothesis, IdentityGroup, PathRule,
    RunRecord, StudyConfig, StudyMetrics,
};
use crate::stopping::{Checkpoint, Decision, StoppingRule};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Practice {
    Reanalysis,
    OptimalStopping,
    ContinuousUntilWin,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PitfallReport {
    pub practice: Practice,
    /// `1/(K+1)`.
    pub nominal_fdr: f64,
    pub observed_fdr: Option<f64>,
    /// Calibration of the Bayes factors the bad procedure reports.
    pub calibration: Vec<CalibrationBin>,
    /// Calibration of the proper procedure on the same paths.
    pub corrected_calibration: Vec<CalibrationBin>,
    pub metrics: BTreeMap<String, f64>,
    pub notes: Vec<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub until_win: Option<UntilWinTrajectory>,
}

/// Per-iteration statistics of the until-win demo; index `i` is after
/// `i + 1` replications.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct UntilWinTrajectory {
    pub bad_win_rate: Vec<f64>,
    pub corrected_win_rate: Vec<f64>,
    pub median_cumulative_log_bf: Vec<f64>,
    pub mean_cumulative_log_bf: Vec<f64>,
}

fn nominal(k: f64) -> f64 {
    1.0 / (k + 1.0)
}

/// Every checkpoint of a path (every `check_every` steps, plus the horizon).
fn checkpoints(path: &[f64], cfg: &StudyConfig) -> Vec<Checkpoint> {
    let mut sum = 0.0;
    let mut out = Vec::with_capacity(path.len() / cfg.check_every as usize + 1);
    for (i, x) in path.iter().enumerate() {
        sum += x;
        let t = i as u64 + 1;
        if t % cfg.check_every == 0 || t == cfg.horizon {
            let s = EffectSummary {
                mean: sum / t as f64,
                n: t as f64,
            };
            out.push(Checkpoint::new(t, s, &cfg.model, cfg.prior));
        }
    }
    out
}

fn record_at(truth: Hypothesis, effect: f64, cp: &Checkpoint, decision: Decision) -> RunRecord {
    RunRecord {
        truth,
        drawn_effect: effect,
        stop_time: cp.t,
        log_bf_at_stop: cp.log_bf,
        decision,
    }
}

fn metrics_map(prefix: &str, m: &StudyMetrics, out: &mut BTreeMap<String, f64>) {
    out.insert(format!("{prefix}_h0_rejection_rate"), m.type_i_error);
    out.insert(format!("{prefix}_power"), m.power);
    if let Some(fdr) = m.fdr {
        out.insert(format!("{prefix}_fdr"), fdr);
    }
}

fn fdr(h0: u64, total: u64) -> Option<f64> {
    (total > 0).then(|| h0 as f64 / total as f64)
}

/// Re-analysis after failing to reject, re-scanning with `BfUpper(K)`.
pub fn demo_reanalysis(cfg: &StudyConfig) -> Result<PitfallReport> {
    let rescan = StoppingRule::BfUpper {
        k: cfg.reject_threshold_k,
    };
    demo_reanalysis_with(cfg, Some(&rescan), None)
}

/// Re-analysis with an arbitrary re-scan rule; `None` disables the second
/// stage, in which case the report is the fixed-horizon study.
pub fn demo_reanalysis_with(
    cfg: &StudyConfig,
    rescan: Option<&StoppingRule>,
    threads: Option<usize>,
) -> Result<PitfallReport> {
    cfg.validate()?;
    match cfg.rule {
        StoppingRule::FixedHorizon { n_max } if n_max >= cfg.horizon => {}
        _ => {
            return Err(Error::validation(
                "rule",
                "re-analysis needs a fixed-horizon primary analysis (fixed_horizon with n_max >= horizon)",
            ))
        }
    }
    if let Some(r) = rescan {
        r.validate()?;
    }
    let monitor = cfg.monitor();
    // (proper record, bad record, rejected in stage 2)
    let pairs = parallel_runs(cfg.total_runs(), threads, |i| {
        let truth = cfg.truth_of(i);
        let mut rng = run_rng(cfg.seed, i);
        let (effect, path) = generate_path(truth, &cfg.model, cfg.horizon, &mut rng);
        let res = monitor.run(path.iter().copied(), &cfg.model, cfg.prior)?;
        let proper = RunRecord {
            truth,
            drawn_effect: effect,
            stop_time: res.stop_time,
            log_bf_at_stop: res.log_bf_at_stop,
            decision: res.decision,
        };
        if rejects(&proper, cfg.prior, cfg.reject_threshold_k) {
            return Ok((proper.clone(), proper, false));
        }
        let hit = rescan.and_then(|r| checkpoints(&path, cfg).into_iter().find(|cp| r.fires(cp)));
        Ok(match hit {
            Some(cp) => {
                let bad = record_at(truth, effect, &cp, Decision::RejectH0);
                let snooped = rejects(&bad, cfg.prior, cfg.reject_threshold_k);
                (proper, bad, snooped)
            }
            None => (proper.clone(), proper, false),
        })
    })?;

    let mut stage2 = [0u64; 2];
    for (p, _, s) in &pairs {
        if *s {
            stage2[(p.truth == Hypothesis::H1) as usize] += 1;
        }
    }
    let (proper, bad): (Vec<_>, Vec<_>) = pairs.into_iter().map(|(p, b, _)| (p, b)).unzip();
    let k = cfg.reject_threshold_k;
    let pm = study_metrics(&proper, cfg.horizon, cfg.prior, k);
    let bm = study_metrics(&bad, cfg.horizon, cfg.prior, k);
    let stage2_fdr = fdr(stage2[0], stage2[0] + stage2[1]);

    let mut metrics = BTreeMap::new();
    metrics_map("proper", &pm, &mut metrics);
    metrics_map("bad", &bm, &mut metrics);
    metrics.insert("stage2_rejections_h0".into(), stage2[0] as f64);
    metrics.insert("stage2_rejections_h1".into(), stage2[1] as f64);
    if let Some(f) = stage2_fdr {
        metrics.insert("stage2_fdr".into(), f);
    }
    let mut notes = vec![format!(
        "observed_fdr is the false-discovery share among rejections added by the re-scan ({} of them)",
        stage2[0] + stage2[1]
    )];
    if let Some(f) = bm.fdr {
        notes.push(format!(
            "combined FDR {f:.4}; the combined reject set is every path whose BF ever reaches K, so it matches one-sided stopping"
        ));
    }
    if pm.type_i_error > 0.0 {
        notes.push(format!(
            "H0 rejection rate rises from {:.4} to {:.4}",
            pm.type_i_error, bm.type_i_error
        ));
    }
    if rescan.is_none() {
        notes = vec!["second stage disabled; this is the fixed-horizon study".into()];
    }
    Ok(PitfallReport {
        practice: Practice::Reanalysis,
        nominal_fdr: nominal(k),
        observed_fdr: if rescan.is_some() { stage2_fdr } else { pm.fdr },
        calibration: calibration_histogram(&bad, &cfg.bin_edges),
        corrected_calibration: calibration_histogram(&proper, &cfg.bin_edges),
        metrics,
        notes,
        until_win: None,
    })
}

/// Earliest checkpoint with the largest Bayes factor.
fn argmax_checkpoint(cps: &[Checkpoint]) -> &Checkpoint {
    let mut best = &cps[0];
    for cp in &cps[1..] {
        if cp.log_bf > best.log_bf {
            best = cp;
        }
    }
    best
}

pub fn demo_optimal_stopping(cfg: &StudyConfig) -> Result<PitfallReport> {
    demo_optimal_stopping_with_threads(cfg, None)
}

/// Reports `BF` at `τ* = argmax_t BF_t` for every path. The corrected
/// procedure is `cfg.rule` itself.
pub fn demo_optimal_stopping_with_threads(cfg: &StudyConfig, threads: Option<usize>) -> Result<PitfallReport> {
    cfg.validate()?;
    let k = cfg.reject_threshold_k;
    let bad = parallel_runs(cfg.total_runs(), threads, |i| {
        let truth = cfg.truth_of(i);
        let mut rng = run_rng(cfg.seed, i);
        let (effect, path) = generate_path(truth, &cfg.model, cfg.horizon, &mut rng);
        let cps = checkpoints(&path, cfg);
        let best = argmax_checkpoint(&cps);
        let decision = if best.log_post_odds >= k.ln() {
            Decision::RejectH0
        } else {
            Decision::InconclusiveAtHorizon
        };
        Ok(record_at(truth, effect, best, decision))
    })?;
    let proper = run_study_with_threads(cfg, threads)?;
    let bm = study_metrics(&bad, cfg.horizon, cfg.prior, k);

    let mut metrics = BTreeMap::new();
    metrics_map("proper", &proper.metrics, &mut metrics);
    metrics_map("bad", &bm, &mut metrics);
    let calibration = calibration_histogram(&bad, &cfg.bin_edges);
    let mut notes = vec!["tau* = argmax over checkpoints of BF_t, earliest on ties".to_string()];
    if let Some(b) = near_bf(&calibration, k, 1000) {
        if let (Some(r), Some(c)) = (b.observed_ratio.value(), b.center_bf()) {
            notes.push(format!("bin around BF = {c:.3}: observed H1:H0 ratio {r:.3}"));
        }
    }
    Ok(PitfallReport {
        practice: Practice::OptimalStopping,
        nominal_fdr: nominal(k),
        observed_fdr: bm.fdr,
        calibration,
        corrected_calibration: proper.calibration,
        metrics,
        notes,
        until_win: None,
    })
}

/// The interior bin containing `bf`, if it holds at least `min_count` runs.
pub fn near_bf(bins: &[CalibrationBin], bf: f64, min_count: u64) -> Option<&CalibrationBin> {
    let lb = bf.ln();
    bins.iter().find(|b| match (b.bin_lo, b.bin_hi) {
        (Some(lo), Some(hi)) => lo <= lb && lb < hi && b.total() >= min_count,
        _ => false,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UntilWinConfig {
    pub n_iterations: u64,
    pub per_test_n: u64,
    pub k: f64,
    pub model: AlternativeModel,
    pub truth: Hypothesis,
    pub worlds: u64,
    pub seed: u64,
}

impl UntilWinConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_iterations == 0 {
            return Err(Error::validation("n_iterations", "must be at least 1"));
        }
        if self.per_test_n == 0 {
            return Err(Error::validation("per_test_n", "must be at least 1"));
        }
        if self.worlds == 0 {
            return Err(Error::validation("worlds", "must be at least 1"));
        }
        if !(self.k > 1.0) || !self.k.is_finite() {
            return Err(Error::validation("k", "must be finite and > 1"));
        }
        self.model.validate()
    }
}

pub fn demo_continuous_until_win(cfg: &UntilWinConfig) -> Result<PitfallReport> {
    demo_continuous_until_win_with_threads(cfg, None)
}

/// Each world runs `n_iterations` independent fixed-horizon replications.
/// Under a composite model every replication draws its own effect.
pub fn demo_continuous_until_win_with_threads(cfg: &UntilWinConfig, threads: Option<usize>) -> Result<PitfallReport> {
    cfg.validate()?;
    let iters = cfg.n_iterations as usize;
    let lk = cfg.k.ln();
    // per world: log BF of each replication
    let worlds = parallel_runs(cfg.worlds, threads, |w| {
        let mut rng = run_rng(cfg.seed, w);
        Ok((0..iters)
            .map(|_| {
                let (_, path) = generate_path(cfg.truth, &cfg.model, cfg.per_test_n, &mut rng);
                let n = cfg.per_test_n as f64;
                let s = EffectSummary {
                    mean: path.iter().sum::<f64>() / n,
                    n,
                };
                cfg.model.log_bf(&s)
            })
            .collect::<Vec<f64>>())
    })?;

    let nw = cfg.worlds as f64;
    let mut won = vec![false; worlds.len()];
    let mut cum = vec![0.0; worlds.len()];
    let mut traj = UntilWinTrajectory {
        bad_win_rate: Vec::with_capacity(iters),
        corrected_win_rate: Vec::with_capacity(iters),
        median_cumulative_log_bf: Vec::with_capacity(iters),
        mean_cumulative_log_bf: Vec::with_capacity(iters),
    };
    for it in 0..iters {
        for (w, lbs) in worlds.iter().enumerate() {
            won[w] |= lbs[it] > lk;
            cum[w] += lbs[it];
        }
        traj.bad_win_rate.push(won.iter().filter(|&&b| b).count() as f64 / nw);
        traj.corrected_win_rate
            .push(cum.iter().filter(|&&c| c > lk).count() as f64 / nw);
        traj.median_cumulative_log_bf.push(median(&cum));
        traj.mean_cumulative_log_bf.push(cum.iter().sum::<f64>() / nw);
    }

    let last = iters - 1;
    let mut metrics = BTreeMap::new();
    metrics.insert("proper_single_test_win_rate".into(), traj.bad_win_rate[0]);
    metrics.insert("bad_win_rate".into(), traj.bad_win_rate[last]);
    metrics.insert("corrected_win_rate".into(), traj.corrected_win_rate[last]);
    metrics.insert("median_cumulative_log_bf".into(), traj.median_cumulative_log_bf[last]);
    metrics.insert("mean_cumulative_log_bf".into(), traj.mean_cumulative_log_bf[last]);

    let mut notes = vec![
        "every world shares one ground truth, so no calibration table is produced".to_string(),
        "observed_fdr is undefined with a single truth; compare the win rates instead".to_string(),
    ];
    if let AlternativeModel::CompositeNormal { .. } = cfg.model {
        if cfg.truth == Hypothesis::H1 {
            notes.push("each replication draws its own effect from the prior".into());
        }
    }
    if cfg.truth == Hypothesis::H0 {
        notes.push(format!(
            "bad win rate after {} replications: {:.4} (a single test: {:.4})",
            iters, traj.bad_win_rate[last], traj.bad_win_rate[0]
        ));
    }
    Ok(PitfallReport {
        practice: Practice::ContinuousUntilWin,
        nominal_fdr: nominal(cfg.k),
        observed_fdr: None,
        calibration: Vec::new(),
        corrected_calibration: Vec::new(),
        metrics,
        notes,
        until_win: Some(traj),
    })
}

fn median(xs: &[f64]) -> f64 {
    let mut v = xs.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

/// Exact summary of an enumerated identity check.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EnumerationSummary {
    pub groups: usize,
    pub violating_groups: usize,
    pub max_relative_gap: f64,
}

impl EnumerationSummary {
    pub fn from_groups(groups: &[IdentityGroup]) -> Self {
        EnumerationSummary {
            groups: groups.len(),
            violating_groups: groups.iter().filter(|g| !g.holds_exactly()).count(),
            max_relative_gap: groups.iter().map(IdentityGroup::relative_gap).fold(0.0, f64::max),
        }
    }
}

/// Re-analysis on a discrete model, enumerated exactly.
pub fn enumerate_reanalysis(model: &DiscreteModel, k: f64, horizon: usize) -> Result<Vec<IdentityGroup>> {
    enumerate_identity_check(model, &PathRule::Reanalysis { k }, horizon)
}

/// Argmax stopping on a discrete model, enumerated exactly.
pub fn enumerate_optimal_stopping(model: &DiscreteModel, horizon: usize) -> Result<Vec<IdentityGroup>> {
    enumerate_identity_check(model, &PathRule::OptimalStopping, horizon)
}
