//! Proper stopping rules and the sequential monitor that applies them.
//!
//! A rule only ever sees a [`Checkpoint`], which is built from the
//! observations seen so far; there is no way for a rule to look ahead.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{posterior_odds, AlternativeModel, EffectSummary, PriorOdds, SufficientStats};
use crate::normal;

/// Declarative stopping rule. Every rule is additionally truncated at the
/// monitoring horizon carried by [`MonitorConfig`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum StoppingRule {
    /// Fires once `t ≥ n_max`.
    FixedHorizon { n_max: u64 },
    /// Fires when posterior odds reach `k`.
    BfUpper { k: f64 },
    /// Fires when posterior odds reach `k` or fall to `1/k`.
    BfTwoSided { k: f64 },
    /// Fires when the two-sided p-value drops below `alpha` and `t ≥ n_min`.
    #[serde(rename = "p_value_min_n")]
    PValueMinN { alpha: f64, n_min: u64 },
    /// Fires when every sub-rule fires.
    All { rules: Vec<StoppingRule> },
    /// Fires when any sub-rule fires.
    Any { rules: Vec<StoppingRule> },
}

/// Which boundary a firing rule crossed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
enum Side {
    Neutral,
    Lower,
    Upper,
}

/// Everything a rule may look at when deciding whether to stop at time `t`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Checkpoint {
    pub t: u64,
    pub summary: EffectSummary,
    pub log_bf: f64,
    pub log_post_odds: f64,
}

impl Checkpoint {
    pub fn new(t: u64, summary: EffectSummary, model: &AlternativeModel, prior: PriorOdds) -> Self {
        let log_bf = model.log_bf(&summary);
        Checkpoint {
            t,
            summary,
            log_bf,
            log_post_odds: prior.ln() + log_bf,
        }
    }
}

impl StoppingRule {
    pub fn validate(&self) -> Result<()> {
        match self {
            StoppingRule::FixedHorizon { n_max } if *n_max == 0 => {
                Err(Error::validation("n_max", "must be at least 1"))
            }
            StoppingRule::BfUpper { k } | StoppingRule::BfTwoSided { k } if !(*k > 1.0) || !k.is_finite() => Err(
                Error::validation("k", format!("threshold must be finite and > 1, got {k}")),
            ),
            StoppingRule::PValueMinN { alpha, n_min } => {
                if !(*alpha > 0.0 && *alpha < 1.0) {
                    Err(Error::validation("alpha", format!("must lie in (0,1), got {alpha}")))
                } else if *n_min == 0 {
                    Err(Error::validation("n_min", "must be at least 1"))
                } else {
                    Ok(())
                }
            }
            StoppingRule::All { rules } | StoppingRule::Any { rules } => {
                if rules.is_empty() {
                    return Err(Error::validation("rules", "composite rule needs at least one sub-rule"));
                }
                rules.iter().try_for_each(StoppingRule::validate)
            }
            _ => Ok(()),
        }
    }

    /// `None` when the rule does not fire; otherwise the boundary crossed.
    fn evaluate(&self, cp: &Checkpoint) -> Option<Side> {
        match self {
            StoppingRule::FixedHorizon { n_max } => (cp.t >= *n_max).then_some(Side::Neutral),
            StoppingRule::BfUpper { k } => (cp.log_post_odds >= k.ln()).then_some(Side::Upper),
            StoppingRule::BfTwoSided { k } => {
                let lk = k.ln();
                if cp.log_post_odds >= lk {
                    Some(Side::Upper)
                } else if cp.log_post_odds <= -lk {
                    Some(Side::Lower)
                } else {
                    None
                }
            }
            StoppingRule::PValueMinN { alpha, n_min } => {
                (cp.t >= *n_min && normal::two_sided_p(cp.summary.z()) < *alpha).then_some(Side::Upper)
            }
            StoppingRule::All { rules } => {
                let mut side = Side::Neutral;
                for r in rules {
                    side = side.max(r.evaluate(cp)?);
                }
                Some(side)
            }
            StoppingRule::Any { rules } => rules.iter().filter_map(|r| r.evaluate(cp)).max(),
        }
    }

    /// True when the rule fires at the given checkpoint.
    pub fn fires(&self, cp: &Checkpoint) -> bool {
        self.evaluate(cp).is_some()
    }

    /// Smallest BF threshold named anywhere in the rule, if any.
    pub fn bf_threshold(&self) -> Option<f64> {
        match self {
            StoppingRule::BfUpper { k } | StoppingRule::BfTwoSided { k } => Some(*k),
            StoppingRule::All { rules } | StoppingRule::Any { rules } => {
                rules.iter().filter_map(StoppingRule::bf_threshold).reduce(f64::min)
            }
            _ => None,
        }
    }
}

/// Whether `rule` says stop at time `t`, given the stats of observations `1..=t`.
pub fn should_stop(
    rule: &StoppingRule,
    t: u64,
    stats_t: &SufficientStats,
    model: &AlternativeModel,
    prior: PriorOdds,
) -> bool {
    match stats_t.summary() {
        Ok(s) => rule.fires(&Checkpoint::new(t, s, model, prior)),
        Err(_) => false,
    }
}

/// Two-sided normal p-value.
pub fn two_sided_p(z: f64) -> f64 {
    normal::two_sided_p(z)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Decision {
    RejectH0,
    AcceptH0,
    InconclusiveAtHorizon,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MonitorResult {
    pub stop_time: u64,
    pub log_bf_at_stop: f64,
    pub log_post_odds_at_stop: f64,
    pub post_odds_at_stop: f64,
    pub stopped_early: bool,
    pub decision: Decision,
}

fn default_check_every() -> u64 {
    1
}

/// A stopping rule together with the horizon and check cadence; this is the
/// JSON shape rules are stored in, e.g.
/// `{"type": "bf_two_sided", "k": 9, "horizon": 100, "check_every": 1}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MonitorConfig {
    #[serde(flatten)]
    pub rule: StoppingRule,
    pub horizon: u64,
    #[serde(default = "default_check_every")]
    pub check_every: u64,
}

impl MonitorConfig {
    pub fn new(rule: StoppingRule, horizon: u64) -> Self {
        MonitorConfig {
            rule,
            horizon,
            check_every: 1,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.rule.validate()?;
        if self.horizon == 0 {
            return Err(Error::validation("horizon", "must be at least 1"));
        }
        if self.check_every == 0 {
            return Err(Error::validation("check_every", "must be at least 1"));
        }
        Ok(())
    }

    fn is_check_point(&self, t: u64) -> bool {
        t % self.check_every == 0 || t == self.horizon
    }

    /// Replays a stream of raw unit-variance observations.
    pub fn run<I>(&self, stream: I, model: &AlternativeModel, prior: PriorOdds) -> Result<MonitorResult>
    where
        I: IntoIterator<Item = f64>,
    {
        let mut stats = SufficientStats::EMPTY;
        let summaries = stream.into_iter().map(move |x| {
            stats = stats.update(x);
            stats.summary().ok()
        });
        self.run_summaries(summaries, model, prior)
    }

    /// Replays a stream of per-time summaries. `None` marks a time at which
    /// the evidence is not yet defined (for example, one group still empty);
    /// the rule is not consulted there.
    pub fn run_summaries<I>(&self, summaries: I, model: &AlternativeModel, prior: PriorOdds) -> Result<MonitorResult>
    where
        I: IntoIterator<Item = Option<EffectSummary>>,
    {
        self.validate()?;
        model.validate()?;
        let mut consumed = 0u64;
        for summary in summaries.into_iter().take(self.horizon as usize) {
            consumed += 1;
            let t = consumed;
            let at_horizon = t == self.horizon;
            if !self.is_check_point(t) {
                continue;
            }
            let Some(summary) = summary else {
                if at_horizon {
                    return Err(Error::InsufficientData(format!(
                        "evidence still undefined at the horizon t = {t}"
                    )));
                }
                continue;
            };
            let cp = Checkpoint::new(t, summary, model, prior);
            let side = self.rule.evaluate(&cp);
            if side.is_some() || at_horizon {
                let decision = match side {
                    Some(Side::Upper) => Decision::RejectH0,
                    Some(Side::Lower) => Decision::AcceptH0,
                    _ => Decision::InconclusiveAtHorizon,
                };
                return Ok(MonitorResult {
                    stop_time: t,
                    log_bf_at_stop: cp.log_bf,
                    log_post_odds_at_stop: cp.log_post_odds,
                    post_odds_at_stop: posterior_odds(prior, cp.log_bf).value,
                    stopped_early: !at_horizon,
                    decision,
                });
            }
        }
        Err(Error::TruncatedStream {
            consumed: consumed as usize,
            needed: self.horizon as usize,
        })
    }
}

/// Runs `rule` over `stream`, checking after every observation up to `horizon`.
pub fn run_monitor<I>(
    stream: I,
    rule: &StoppingRule,
    model: &AlternativeModel,
    prior: PriorOdds,
    horizon: u64,
) -> Result<MonitorResult>
where
    I: IntoIterator<Item = f64>,
{
    MonitorConfig::new(rule.clone(), horizon).run(stream, model, prior)
}
