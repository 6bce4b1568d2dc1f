//! Three ways to break the calibration: re-scanning after a failed fixed
//! horizon test, reporting the best-looking checkpoint, and repeating a
//! test until it wins.
//!
//! ```bash
//! cargo run --release -p seqbayes --example bad_practices
//! ```

use seqbayes::model::AlternativeModel;
use seqbayes::pitfalls::{demo_continuous_until_win, demo_optimal_stopping, demo_reanalysis, near_bf, UntilWinConfig};
use seqbayes::simulate::{Hypothesis, StudyConfig};
use seqbayes::stopping::StoppingRule;

fn main() -> seqbayes::Result<()> {
    let model = AlternativeModel::precise(0.2)?;
    let mut cfg = StudyConfig::new(model, StoppingRule::FixedHorizon { n_max: 100 }, 100, 50_000, 7);
    cfg.reject_threshold_k = 9.0;

    let rep = demo_reanalysis(&cfg)?;
    println!("re-analysis after failing to reject");
    println!(
        "  H0 rejection rate {:.4} -> {:.4}; FDR of the re-scan rejections {:.3} (nominal {:.3})",
        rep.metrics["proper_h0_rejection_rate"],
        rep.metrics["bad_h0_rejection_rate"],
        rep.observed_fdr.unwrap_or(f64::NAN),
        rep.nominal_fdr
    );

    let rep = demo_optimal_stopping(&cfg)?;
    println!("argmax stopping");
    if let Some(b) = near_bf(&rep.calibration, 9.0, 1000) {
        println!(
            "  bin at BF {:.2}: observed H1:H0 {:.2}",
            b.center_bf().unwrap_or(f64::NAN),
            b.observed_ratio.value().unwrap_or(f64::NAN)
        );
    }
    if let Some(b) = near_bf(&rep.corrected_calibration, 1.0, 1000) {
        println!(
            "  proper fixed horizon, bin at BF {:.2}: {:.2}",
            b.center_bf().unwrap_or(f64::NAN),
            b.observed_ratio.value().unwrap_or(f64::NAN)
        );
    }

    let rep = demo_continuous_until_win(&UntilWinConfig {
        n_iterations: 20,
        per_test_n: 100,
        k: 9.0,
        model,
        truth: Hypothesis::H0,
        worlds: 10_000,
        seed: 7,
    })?;
    let t = rep.until_win.expect("trajectory");
    println!("testing until win under H0");
    for i in [0usize, 4, 9, 19] {
        println!(
            "  after {:>2} tests: bad win rate {:.3}, median cumulative log BF {:+.2}",
            i + 1,
            t.bad_win_rate[i],
            t.median_cumulative_log_bf[i]
        );
    }
    Ok(())
}
