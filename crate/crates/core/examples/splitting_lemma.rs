//! The splitting lemma on an adapted form and on a perturbed one.

use nalgebra::DMatrix;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use warpsplit::forms::SymmetricBilinearForm;
use warpsplit::linalg;
use warpsplit::splitting::{lemma_verify, LemmaConfig, OrthogonalSplitting};

fn main() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let (d1, d2) = (3, 4);
    let n = d1 + d2;
    let block = |rng: &mut ChaCha8Rng| {
        let mut m = DMatrix::zeros(n, n);
        m.view_mut((0, 0), (d1, d1)).copy_from(&linalg::gaussian_symmetric(d1, rng));
        m.view_mut((d1, d1), (d2, d2)).copy_from(&linalg::gaussian_symmetric(d2, rng));
        m
    };
    let ops = vec![block(&mut rng), block(&mut rng)];
    let split = OrthogonalSplitting::coordinate(&[d1, d2]);
    let config = LemmaConfig::default();

    let adapted = SymmetricBilinearForm::new(ops.clone(), 1e-12).unwrap();
    let r = lemma_verify(&adapted, &split, &config).unwrap();
    println!("adapted: {:?}, nullities {:?}, |S| = {:.1e}", r.verdict, r.nullity.values, r.s_norm);

    // a mixed term breaks the curvature conditions, so the lemma says nothing
    let mut mixed = ops;
    mixed[0][(0, d1)] = 0.5;
    mixed[0][(d1, 0)] = 0.5;
    let perturbed = SymmetricBilinearForm::new(mixed, 1e-12).unwrap();
    let r = lemma_verify(&perturbed, &split, &config).unwrap();
    println!("perturbed: {:?} ({})", r.verdict, r.reason.unwrap_or_default());
}
