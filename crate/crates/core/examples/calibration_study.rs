//! Calibration of the stopping-time Bayes factor: among runs that stop with
//! Bayes factor near K, H1 runs outnumber H0 runs by about K, whatever the
//! (proper) stopping rule. Runs the precise study with a two-sided rule and
//! the composite study (N = 1000, V = 0.1) with a one-sided rule.
//!
//! ```bash
//! cargo run --release -p seqbayes --example calibration_study
//! ```

use seqbayes::model::AlternativeModel;
use seqbayes::simulate::{calibration_violations, run_study, CalibrationBin, StudyConfig};
use seqbayes::stopping::StoppingRule;

fn print_bins(bins: &[CalibrationBin]) {
    println!(
        "{:>10} {:>8} {:>8} {:>10} {:>8}",
        "bin BF", "H1", "H0", "H1/H0", "rel err"
    );
    for b in bins.iter().filter(|b| b.total() >= 1000) {
        let Some(c) = b.center_bf() else { continue };
        let ratio = b.observed_ratio.value().unwrap_or(f64::NAN);
        println!(
            "{:>10.3} {:>8} {:>8} {:>10.3} {:>+8.3}",
            c,
            b.count_h1,
            b.count_h0,
            ratio,
            b.relative_error().unwrap_or(f64::NAN)
        );
    }
}

fn main() -> seqbayes::Result<()> {
    let tiers = [(1000, 0.20), (5000, 0.10)];

    let precise = StudyConfig::new(
        AlternativeModel::precise(0.2)?,
        StoppingRule::BfTwoSided { k: 9.0 },
        100,
        50_000,
        7,
    );
    let report = run_study(&precise)?;
    println!("precise δ = 0.2, two-sided K = 9, N = 100");
    print_bins(&report.calibration);
    println!(
        "bins outside tolerance: {}\n",
        calibration_violations(&report.calibration, &tiers).len()
    );

    let composite = StudyConfig::new(
        AlternativeModel::composite(0.01)?,
        StoppingRule::BfUpper { k: 9.0 },
        1000,
        50_000,
        7,
    );
    let report = run_study(&composite)?;
    println!("composite V = 0.1, one-sided K = 9, N = 1000");
    print_bins(&report.calibration);
    println!(
        "bins outside tolerance: {}",
        calibration_violations(&report.calibration, &tiers).len()
    );

    let fixed = StudyConfig::new(
        AlternativeModel::composite(0.01)?,
        StoppingRule::FixedHorizon { n_max: 1000 },
        1000,
        20_000,
        7,
    );
    let max = run_study(&fixed)?
        .records
        .iter()
        .map(|r| r.log_bf_at_stop)
        .fold(f64::NEG_INFINITY, f64::max);
    println!("largest fixed-horizon composite BF: {:.3e}", max.exp());
    Ok(())
}
