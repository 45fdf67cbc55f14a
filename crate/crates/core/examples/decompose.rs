//! Recovers the warped product structure of a hypersurface of revolution,
//! then shows the nullity gate rejecting the same surface wrapped in a cylinder.

use warpsplit::harness::generate::round_trip_corpus;
use warpsplit::harness::round_trip;
use warpsplit::immersions::{decompose, DecomposeConfig};

fn main() {
    let case = round_trip_corpus(7, 1).remove(0);
    let comp = case.composition().unwrap();
    let samples = case.samples.points(comp.n()).unwrap();
    let result = decompose(&comp.immersion(), &samples, &DecomposeConfig::default()).unwrap();
    println!("{}: blocks {:?}, base {:?}", case.name, result.block_dims, result.base);
    for w in &result.factors {
        println!("  factor {:?}: rho/rho* = {:.4?}", w.coords, w.rho);
    }
    let rt = round_trip(&comp, &samples, &result, 1e-6);
    println!("round trip passed: {} (rho error {:.1e})", rt.passed, rt.max_rho_error);

    let wrapped = case.cylinder_wrapped().unwrap().expect("flat ambient").build().unwrap();
    match decompose(&wrapped, &samples, &DecomposeConfig::default()) {
        Ok(r) => println!("wrapped: unexpectedly decomposed into {:?}", r.block_dims),
        Err(e) => println!("wrapped: {e}"),
    }
}
