//! Proportional warping functions collapse into one factor.

use nalgebra::DVector;
use warpsplit::warped::{builtin, group_warpings};

fn main() {
    let spec = builtin::dependent_warpings();
    let grid: Vec<DVector<f64>> = (0..4).flat_map(|i| (0..4).map(move |j| DVector::from_vec(vec![0.2 * i as f64 - 0.3, 0.2 * j as f64 - 0.3]))).collect();
    let g = group_warpings(&spec, &grid, 1e-6).unwrap();
    println!("groups {:?}", g.groups);
    println!("lambdas {:?}", g.lambdas);
    println!("largest residual {:.1e}", g.max_residual);
}
