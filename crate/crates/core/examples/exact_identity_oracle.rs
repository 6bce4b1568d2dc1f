//! Exhaustive check of P(BF_τ = K | H1) / P(BF_τ = K | H0) = K on a
//! three-outcome model, in exact rational arithmetic. A proper rule passes
//! every group; argmax stopping does not.
//!
//! ```bash
//! cargo run --release -p seqbayes --example exact_identity_oracle
//! ```

use seqbayes::simulate::{enumerate_identity_check, DiscreteModel, PathRule};
use seqbayes::stopping::StoppingRule;

fn main() -> seqbayes::Result<()> {
    let model = DiscreteModel::new(&[(1, 2), (1, 3), (1, 6)], &[(1, 4), (1, 4), (1, 2)])?;
    let rules = [
        ("bf_upper(4)", PathRule::Proper(StoppingRule::BfUpper { k: 4.0 })),
        ("argmax BF_t", PathRule::OptimalStopping),
        ("re-analysis k=4", PathRule::Reanalysis { k: 4.0 }),
    ];
    for (name, rule) in rules {
        let groups = enumerate_identity_check(&model, &rule, 6)?;
        let bad = groups.iter().filter(|g| !g.holds_exactly()).count();
        println!("{name}: {} BF groups, {bad} violate the identity", groups.len());
        for g in groups.iter().filter(|g| !g.holds_exactly()).take(3) {
            println!("    BF = {} but P1/P0 = {}", g.bf, g.ratio());
        }
    }
    Ok(())
}
