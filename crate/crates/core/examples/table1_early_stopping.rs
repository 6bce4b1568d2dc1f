//! Fixed horizon vs. one-sided vs. two-sided Bayes-factor stopping for a
//! precise alternative (δ = 0.2, N = 100, K = 9, even prior odds).
//!
//! ```bash
//! cargo run --release -p seqbayes --example table1_early_stopping
//! ```

use seqbayes::model::AlternativeModel;
use seqbayes::simulate::{run_study, StudyConfig};
use seqbayes::stopping::StoppingRule;

fn main() -> seqbayes::Result<()> {
    let model = AlternativeModel::precise(0.2)?;
    let designs = [
        ("fixed horizon", StoppingRule::FixedHorizon { n_max: 100 }),
        ("one-sided stop", StoppingRule::BfUpper { k: 9.0 }),
        ("two-sided stop", StoppingRule::BfTwoSided { k: 9.0 }),
        ("p < 0.1, n >= 10", StoppingRule::PValueMinN { alpha: 0.1, n_min: 10 }),
    ];

    println!(
        "{:<18} {:>7} {:>7} {:>7} {:>9} {:>9} {:>10}",
        "design", "type-I", "power", "FDR", "early H1", "early H0", "mean τ<N"
    );
    for (name, rule) in designs {
        let mut cfg = StudyConfig::new(model, rule, 100, 50_000, 7);
        cfg.reject_threshold_k = 9.0;
        let m = run_study(&cfg)?.metrics;
        println!(
            "{:<18} {:>7.3} {:>7.3} {:>7.3} {:>8.1}% {:>8.1}% {:>10.1}",
            name,
            m.type_i_error,
            m.power,
            m.fdr.unwrap_or(f64::NAN),
            100.0 * m.early_stop_rate_h1,
            100.0 * m.early_stop_rate_h0,
            m.mean_stop_time_early.unwrap_or(f64::NAN),
        );
    }
    Ok(())
}
