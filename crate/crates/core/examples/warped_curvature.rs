//! Warped curvature formula against a finite-difference Riemann tensor.

use nalgebra::DVector;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use warpsplit::warped::{builtin, fd_riemann};

fn e(n: usize, i: usize) -> DVector<f64> {
    DVector::from_fn(n, |r, _| if r == i { 1.0 } else { 0.0 })
}

fn main() {
    let horo = builtin::horospherical();
    let x = DVector::from_element(horo.n(), 0.2);
    println!("horospherical K(e0, e1) = {:.12}", horo.sectional_curvature(&x, &e(horo.n(), 0), &e(horo.n(), 1)).unwrap());

    let mut rng = ChaCha8Rng::seed_from_u64(9);
    for _ in 0..5 {
        let spec = builtin::random_spec(&mut rng);
        let x = builtin::random_point(&spec, &mut rng);
        let n = spec.n();
        let fd = fd_riemann(&|y: &DVector<f64>| spec.metric(y), &x, 1e-4).unwrap();
        let mut worst: f64 = 0.0;
        for i in 0..n {
            for j in i + 1..n {
                let r = spec.curvature_operator(&x, &e(n, i), &e(n, j)).unwrap();
                worst = worst.max((r - fd.apply(&e(n, i), &e(n, j))).amax());
            }
        }
        println!("dims {:?}: formula vs finite differences {worst:.1e}", spec.dims());
    }
}
