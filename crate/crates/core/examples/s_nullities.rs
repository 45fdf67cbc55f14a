//! s-nullities of a diagonal form in R^7 with values in R^2.

use nalgebra::{DMatrix, DVector};
use warpsplit::forms::{nullity_profile, NullityConfig, SymmetricBilinearForm};

fn diag(v: &[f64]) -> DMatrix<f64> {
    DMatrix::from_diagonal(&DVector::from_column_slice(v))
}

fn main() {
    let form = SymmetricBilinearForm::new(
        vec![diag(&[1.0, 2.0, 3.0, 0.0, 0.0, 0.0, 0.0]), diag(&[0.0, 0.0, 0.0, 1.0, -1.0, 2.0, 0.0])],
        1e-12,
    )
    .expect("symmetric");
    let report = nullity_profile(&form, &NullityConfig::default()).expect("p <= 3");
    for s in 1..=form.p() {
        println!("nu_{s} = {}  (bound n - 2s = {}, margin {})", report.nu(s), form.n() - 2 * s, report.margin(s));
    }
    println!("hypothesis holds: {}", report.hypothesis_ok);
}
