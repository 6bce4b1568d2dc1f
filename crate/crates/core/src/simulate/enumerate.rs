//! Exact check of the stopping-time likelihood-ratio identity
//! `P(BF_τ = K | H1) / P(BF_τ = K | H0) = K` by exhaustive enumeration.
//!
//! The observation model is a finite alphabet with rational masses under each
//! hypothesis, so every path probability and every Bayes factor is an exact
//! rational and the identity can be checked with zero tolerance.

use std::collections::BTreeMap;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::error::{Error, Result};
use crate::stopping::StoppingRule;

/// Refuse enumerations larger than this many full paths.
pub const MAX_ENUMERATED_PATHS: u64 = 10_000_000;

/// Finite-alphabet observation model with rational masses.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteModel {
    h0: Vec<BigRational>,
    h1: Vec<BigRational>,
    lr: Vec<BigRational>,
}

impl DiscreteModel {
    /// Masses given as `(numerator, denominator)` pairs. Both lists must sum
    /// to one and every outcome must be possible under both hypotheses.
    pub fn new(h0: &[(i64, i64)], h1: &[(i64, i64)]) -> Result<Self> {
        if h0.len() != h1.len() || h0.len() < 2 {
            return Err(Error::validation(
                "alphabet",
                "need at least two outcomes, same count under H0 and H1",
            ));
        }
        let conv = |v: &[(i64, i64)], name: &str| -> Result<Vec<BigRational>> {
            let out = v
                .iter()
                .map(|&(n, d)| {
                    if d <= 0 || n <= 0 {
                        Err(Error::validation(name, "masses must be positive fractions"))
                    } else {
                        Ok(BigRational::new(BigInt::from(n), BigInt::from(d)))
                    }
                })
                .collect::<Result<Vec<_>>>()?;
            let total: BigRational = out.iter().cloned().sum();
            if !total.is_one() {
                return Err(Error::validation(name, format!("masses sum to {total}, not 1")));
            }
            Ok(out)
        };
        let h0 = conv(h0, "h0")?;
        let h1 = conv(h1, "h1")?;
        let lr = h1.iter().zip(&h0).map(|(a, b)| a / b).collect();
        Ok(DiscreteModel { h0, h1, lr })
    }

    pub fn alphabet_size(&self) -> usize {
        self.h0.len()
    }

    /// Per-outcome likelihood ratios `P(x|H1)/P(x|H0)`.
    pub fn likelihood_ratios(&self) -> &[BigRational] {
        &self.lr
    }
}

/// How the stopping time of a fully observed path is chosen.
#[derive(Debug, Clone, PartialEq)]
pub enum PathRule {
    /// A declarative rule evaluated on prefixes only (with even prior odds).
    Proper(StoppingRule),
    /// `τ = argmax_t BF_t` over the whole path, earliest on ties. Improper.
    OptimalStopping,
    /// Fixed-horizon test at N; if that fails to clear `k`, rescan the same
    /// path and report the first time `BF_t ≥ k`. Improper.
    Reanalysis { k: f64 },
}

impl PathRule {
    fn validate(&self) -> Result<()> {
        fn check(rule: &StoppingRule) -> Result<()> {
            match rule {
                StoppingRule::PValueMinN { .. } => Err(Error::UnsupportedRule(
                    "p-value rules need a normal model and cannot be enumerated".into(),
                )),
                StoppingRule::All { rules } | StoppingRule::Any { rules } => rules.iter().try_for_each(check),
                _ => Ok(()),
            }
        }
        match self {
            PathRule::Proper(r) => {
                r.validate()?;
                check(r)
            }
            PathRule::OptimalStopping => Ok(()),
            PathRule::Reanalysis { k } if !(*k > 1.0) || !k.is_finite() => {
                Err(Error::validation("k", "must be finite and > 1"))
            }
            PathRule::Reanalysis { .. } => Ok(()),
        }
    }

    /// Zero-based index into `bfs` (where `bfs[i]` is the BF after `i + 1`
    /// observations) of the stopping time.
    fn stop_index(&self, bfs: &[BigRational]) -> usize {
        let last = bfs.len() - 1;
        match self {
            PathRule::Proper(rule) => (0..last).find(|&i| fires(rule, i as u64 + 1, &bfs[i])).unwrap_or(last),
            PathRule::OptimalStopping => {
                let mut best = 0;
                for i in 1..bfs.len() {
                    if bfs[i] > bfs[best] {
                        best = i;
                    }
                }
                best
            }
            PathRule::Reanalysis { k } => {
                let k = rational(*k);
                if bfs[last] > k {
                    last
                } else {
                    bfs.iter().position(|b| *b >= k).unwrap_or(last)
                }
            }
        }
    }
}

fn rational(x: f64) -> BigRational {
    BigRational::from_float(x).expect("finite threshold")
}

fn fires(rule: &StoppingRule, t: u64, bf: &BigRational) -> bool {
    match rule {
        StoppingRule::FixedHorizon { n_max } => t >= *n_max,
        StoppingRule::BfUpper { k } => *bf >= rational(*k),
        StoppingRule::BfTwoSided { k } => {
            let k = rational(*k);
            *bf >= k || *bf <= k.recip()
        }
        StoppingRule::PValueMinN { .. } => unreachable!("rejected by validation"),
        StoppingRule::All { rules } => rules.iter().all(|r| fires(r, t, bf)),
        StoppingRule::Any { rules } => rules.iter().any(|r| fires(r, t, bf)),
    }
}

/// Total probability under each hypothesis of the paths whose stopping-time
/// BF equals `bf`.
#[derive(Debug, Clone, PartialEq)]
pub struct IdentityGroup {
    pub bf: BigRational,
    pub p_h1: BigRational,
    pub p_h0: BigRational,
}

impl IdentityGroup {
    pub fn ratio(&self) -> BigRational {
        &self.p_h1 / &self.p_h0
    }

    /// The identity holds with no rounding at all.
    pub fn holds_exactly(&self) -> bool {
        self.ratio() == self.bf
    }

    pub fn bf_value(&self) -> f64 {
        self.bf.to_f64().unwrap_or(f64::NAN)
    }

    pub fn ratio_value(&self) -> f64 {
        self.ratio().to_f64().unwrap_or(f64::NAN)
    }

    /// `|ratio / bf − 1|`, evaluated exactly before converting.
    pub fn relative_gap(&self) -> f64 {
        ((self.ratio() / &self.bf) - BigRational::one())
            .abs()
            .to_f64()
            .unwrap_or(f64::INFINITY)
    }
}

/// Enumerates every path of length `horizon`, stops each according to
/// `rule`, and groups the paths by their exact stopping-time Bayes factor.
pub fn enumerate_identity_check(model: &DiscreteModel, rule: &PathRule, horizon: usize) -> Result<Vec<IdentityGroup>> {
    rule.validate()?;
    if horizon == 0 {
        return Err(Error::validation("horizon", "must be at least 1"));
    }
    let a = model.alphabet_size();
    let paths = (a as f64).powi(horizon as i32);
    if paths > MAX_ENUMERATED_PATHS as f64 {
        return Err(Error::StateSpaceTooLarge {
            paths,
            limit: MAX_ENUMERATED_PATHS,
        });
    }

    let mut groups: BTreeMap<BigRational, (BigRational, BigRational)> = BTreeMap::new();
    let mut digits = vec![0usize; horizon];
    let mut bfs = Vec::with_capacity(horizon);
    loop {
        bfs.clear();
        let mut bf = BigRational::one();
        let mut p0 = BigRational::one();
        let mut p1 = BigRational::one();
        for &d in &digits {
            bf *= &model.lr[d];
            p0 *= &model.h0[d];
            p1 *= &model.h1[d];
            bfs.push(bf.clone());
        }
        let tau = rule.stop_index(&bfs);
        let entry = groups
            .entry(bfs[tau].clone())
            .or_insert_with(|| (BigRational::zero(), BigRational::zero()));
        entry.0 += p1;
        entry.1 += p0;

        // odometer increment
        let mut pos = horizon;
        loop {
            if pos == 0 {
                return Ok(groups
                    .into_iter()
                    .map(|(bf, (p_h1, p_h0))| IdentityGroup { bf, p_h1, p_h0 })
                    .collect());
            }
            pos -= 1;
            digits[pos] += 1;
            if digits[pos] < a {
                break;
            }
            digits[pos] = 0;
        }
    }
}
