//! Randomized search for counterexamples to the splitting lemma.
//!
//! Usage: `cargo run --example falsify_lemma -- [n] [p] [trials] [seed]`

use std::time::Instant;

use warpsplit::splitting::{falsify, FalsifyConfig};

fn main() {
    let args: Vec<u64> = std::env::args().skip(1).map(|a| a.parse().expect("integer argument")).collect();
    let n = args.first().copied().unwrap_or(7) as usize;
    let p = args.get(1).copied().unwrap_or(2) as usize;
    let trials = args.get(2).copied().unwrap_or(300) as usize;
    let seed = args.get(3).copied().unwrap_or(1);

    let start = Instant::now();
    let report = falsify(n, p, trials, seed, &FalsifyConfig::default());
    println!("n={n} p={p} trials={trials} seed={seed} ({:.2?})", start.elapsed());
    for (family, s) in &report.families {
        println!(
            "  {family:?}: generated {} off-constraint {} gate-rejected {} (mixed {}) tested {} violations {} max|S| {:.1e} min margin {:?}",
            s.generated, s.off_constraint, s.gate_rejected, s.gate_rejected_mixed, s.tested, s.violations, s.max_s_norm, s.min_margin
        );
    }
    println!("tested {} violations {}", report.tested, report.violations);
}
