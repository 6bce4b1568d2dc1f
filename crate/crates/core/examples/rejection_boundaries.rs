//! How the z value needed to reject grows with n: constant for NHST, like
//! √n for a precise alternative, like √ln n for a composite one.
//!
//! ```bash
//! cargo run --release -p seqbayes --example rejection_boundaries
//! ```

use seqbayes::boundary::{boundary_table, log_grid, precise_constants};

fn main() -> seqbayes::Result<()> {
    let (alpha, delta, v_sq, k) = (0.05, 0.2, 0.01, 9.0);
    let (c2, c3) = precise_constants(delta, k);
    println!("precise boundary = {c2}·√n + {c3:.4}/√n");
    println!(
        "{:>12} {:>8} {:>14} {:>16}",
        "n", "NHST", "Bayes precise", "Bayes composite"
    );
    for row in boundary_table(&log_grid(10, 100_000_000, 15), alpha, delta, v_sq, k)? {
        println!(
            "{:>12} {:>8.4} {:>14.4} {:>16.4}",
            row.n,
            row.nhst,
            row.bayes_precise,
            row.bayes_composite.unwrap_or(f64::NAN)
        );
    }
    Ok(())
}
