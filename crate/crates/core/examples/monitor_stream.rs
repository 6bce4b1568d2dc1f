//! Monitor a two-arm experiment as units arrive. Each row is one unit's
//! metric; the comparison is reduced to a one-sample effect size at every
//! step and checked against a two-sided Bayes factor rule.
//!
//! ```bash
//! cargo run --release -p seqbayes --example monitor_stream
//! ```

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use seqbayes::io::read_monitor_csv;
use seqbayes::model::{false_discovery_prob_from_log, AlternativeModel, PriorOdds};
use seqbayes::stopping::{MonitorConfig, StoppingRule};

fn main() -> seqbayes::Result<()> {
    // treatment lifts a metric with sd 2 by 0.3, i.e. δ = 0.15
    let mut rng = ChaCha8Rng::seed_from_u64(42);
    let control = Normal::new(10.0, 2.0).expect("valid normal");
    let treatment = Normal::new(10.3, 2.0).expect("valid normal");
    let mut csv = String::from("unit_id,group,value\n");
    for i in 0..4000 {
        let (group, value) = if rng.random::<bool>() {
            ("treatment", treatment.sample(&mut rng))
        } else {
            ("control", control.sample(&mut rng))
        };
        csv.push_str(&format!("u{i},{group},{value}\n"));
    }

    let input = read_monitor_csv(csv.as_bytes())?;
    let monitor = MonitorConfig::new(StoppingRule::BfTwoSided { k: 19.0 }, input.len() as u64);
    let model = AlternativeModel::composite(0.01)?;
    let prior = PriorOdds::from_probability(0.3)?;
    let res = monitor.run_summaries(input.summaries()?, &model, prior)?;
    println!(
        "stopped after {} units ({:?}); BF {:.1}, posterior odds {:.1}, P(H0 | data) {:.3}",
        res.stop_time,
        res.decision,
        res.log_bf_at_stop.exp(),
        res.post_odds_at_stop,
        false_discovery_prob_from_log(res.log_post_odds_at_stop)
    );
    Ok(())
}
