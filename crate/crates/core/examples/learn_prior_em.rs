//! Fit the prior (p, V) from a history of experiments, then turn it into
//! prior odds and a composite model for the next test.
//!
//! ```bash
//! cargo run --release -p seqbayes --example learn_prior_em
//! ```

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use seqbayes::model::{AlternativeModel, PriorOdds};
use seqbayes::prior_em::{em_fit_default, synthetic_history, v_sq_lower_bound, EmOptions};

fn main() -> seqbayes::Result<()> {
    let opts = EmOptions::default();
    for seed in 1..=3 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let history = synthetic_history(&mut rng, 10_000, 0.2, 0.1, (500.0, 5000.0));
        let (fit, trace) = em_fit_default(&history, &opts)?;
        println!(
            "seed {seed}: p = {:.4}, V = {:.4} after {} iterations (converged: {})",
            fit.p,
            fit.v(),
            trace.n_iter,
            trace.converged
        );
        if seed == 1 {
            let odds = PriorOdds::from_probability(fit.p)?;
            let model = AlternativeModel::composite(fit.v_sq)?;
            println!("  next test: prior odds {:.4}, model {model:?}", odds.value());
        }
    }

    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let null_history = synthetic_history(&mut rng, 5_000, 0.0, 0.1, (500.0, 5000.0));
    let (fit, trace) = em_fit_default(&null_history, &opts)?;
    println!(
        "all-null history: v_sq = {:.3e} (floor {:.3e}), floor active: {}",
        fit.v_sq,
        v_sq_lower_bound(&null_history, opts.k),
        trace.lower_bound_active
    );
    Ok(())
}
