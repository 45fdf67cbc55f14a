//! Pullback metrics of the flat, spherical and hyperbolic warped representations.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use warpsplit::spaceforms::{builtin, pullback_metric};

fn main() {
    for (name, rep) in [("R^4 rotation", builtin::rotation(2)), ("S^3 Clifford", builtin::clifford()), ("H^4", builtin::hyperbolic(2, 0.6))] {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let (mut off, mut inb) = (0.0f64, 0.0f64);
        for _ in 0..50 {
            let x = rep.sample_point(0.5, 0.2, &mut rng);
            let c = pullback_metric(&rep, &x, 1e-4).unwrap();
            off = off.max(c.off_block);
            inb = inb.max(c.in_block_rel);
        }
        println!("{name:>13} (c = {:+}): off-block {off:.1e}, in-block relative {inb:.1e}", rep.c());
    }
}
