//! Second fundamental form of a warped composition, its nullities, and the
//! warped formula for alpha.

use warpsplit::forms::NullityConfig;
use warpsplit::immersions::composition::builtin;
use warpsplit::immersions::{box_samples, codazzi_residual, fundamental_forms, nolker_alpha_check, pointwise_nullities};

fn main() {
    let comp = builtin::clifford_curves();
    let f = comp.immersion();
    let groups = comp.groups();
    let samples = box_samples(comp.n(), 4, 0.3, 2);
    let config = NullityConfig { rank_tol: 1e-5, ..NullityConfig::default() };
    println!("n = {}, factor coordinates {:?}", comp.n(), groups);
    for x in &samples {
        let (_, data) = fundamental_forms(&f, x).unwrap();
        let nu = pointwise_nullities(&f, x, &config).unwrap();
        println!(
            "x = {:.2?}: nullities {:?}, mixed alpha {:.1e}, Codazzi {:.1e}",
            x.as_slice(),
            nu.values,
            data.mixed_residual(&groups),
            codazzi_residual(&f, x, 1e-3).unwrap()
        );
    }
    let check = nolker_alpha_check(&comp, &samples).unwrap();
    println!("warped alpha formula residual {:.1e}", check.max_residual);
}
