use approx::assert_relative_eq;
use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use warpsplit::forms::{common_kernel_dim, nullity_profile, NullityConfig};
use warpsplit::harness::generate::{random_form, FormFamily};
use warpsplit::linalg;
use warpsplit::splitting::OrthogonalSplitting;
use warpsplit::warped::builtin as specs;

fn family() -> impl Strategy<Value = FormFamily> {
    prop::sample::select(FormFamily::ALL.to_vec())
}

fn vector(n: usize, seed: u64) -> DVector<f64> {
    linalg::gaussian_vector(n, &mut ChaCha8Rng::seed_from_u64(seed))
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 48, ..ProptestConfig::default() })]

    #[test]
    fn gauss_tensor_symmetries(n in 1usize..=8, p in 1usize..=3, fam in family(), seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let form = random_form(n, p, fam, &mut rng);
        let [x, y, z, w] = [1, 2, 3, 4].map(|k| vector(n, seed ^ k));
        let r = |a: &DVector<f64>, b: &DVector<f64>, c: &DVector<f64>, d: &DVector<f64>| form.gauss_tensor(a, b, c, d).unwrap();
        let base = r(&x, &y, &z, &w);
        let scale = 1.0 + base.abs();
        assert_relative_eq!(base, -r(&y, &x, &z, &w), epsilon = 1e-10 * scale);
        assert_relative_eq!(base, -r(&x, &y, &w, &z), epsilon = 1e-10 * scale);
        assert_relative_eq!(base, r(&z, &w, &x, &y), epsilon = 1e-10 * scale);
        assert_relative_eq!(base + r(&y, &z, &x, &w) + r(&z, &x, &y, &w), 0.0, epsilon = 1e-10 * scale);
    }

    #[test]
    fn nullities_are_monotone_and_end_at_the_common_kernel(n in 2usize..=6, p in 1usize..=2, fam in family(), seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let form = random_form(n, p, fam, &mut rng);
        let config = NullityConfig { grid_res: 180, starts: 8, ..NullityConfig::default() };
        let values = nullity_profile(&form, &config).unwrap().values;
        prop_assert!(values.windows(2).all(|w| w[0] >= w[1]), "{values:?}");
        prop_assert_eq!(values[p - 1], common_kernel_dim(&form, config.rank_tol));
    }

    #[test]
    fn nullities_are_invariant_under_isometries(n in 2usize..=6, p in 1usize..=2, fam in family(), seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let form = random_form(n, p, fam, &mut rng);
        let moved = form.conjugate(&linalg::random_orthogonal(n, &mut rng)).rotate_values(&linalg::random_orthogonal(p, &mut rng));
        let config = NullityConfig { grid_res: 180, starts: 8, ..NullityConfig::default() };
        prop_assert_eq!(nullity_profile(&form, &config).unwrap().values, nullity_profile(&moved, &config).unwrap().values);
    }

    #[test]
    fn svd_reconstructs_block_sparse_matrices(rows in 1usize..=12, cols in 1usize..=12, density in 0.1f64..1.0, seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mask = DMatrix::from_fn(rows, cols, |i, j| if ((i * 7 + j * 3) as f64 * 0.37 + seed as f64).sin().abs() < density { 1.0 } else { 0.0 });
        let a = linalg::gaussian_matrix(rows, cols, &mut rng).component_mul(&mask);
        let svd = linalg::svd(&a);
        let (u, vt) = (svd.u.clone().unwrap(), svd.v_t.clone().unwrap());
        let back = u * DMatrix::from_diagonal(&svd.singular_values) * vt;
        prop_assert!((back - &a).amax() <= 1e-10 * (1.0 + a.amax()));
    }

    #[test]
    fn lstsq_matches_the_normal_equations(rows in 3usize..=20, cols in 1usize..=3, seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let j = linalg::gaussian_matrix(rows, cols, &mut rng);
        let b = linalg::gaussian_vector(rows, &mut rng);
        let x = linalg::lstsq(&j, &b, 1e-12);
        let normal = (j.transpose() * &j).cholesky().unwrap().solve(&(j.transpose() * &b));
        prop_assert!((x - normal).amax() <= 1e-8);
    }

    #[test]
    fn coordinate_projectors_sum_to_identity(dims in prop::collection::vec(1usize..=4, 1..=4)) {
        let split = OrthogonalSplitting::coordinate(&dims);
        let n: usize = dims.iter().sum();
        let sum = (0..dims.len()).fold(DMatrix::zeros(n, n), |acc, i| acc + split.projector(i));
        prop_assert!((sum - DMatrix::<f64>::identity(n, n)).amax() <= 1e-14);
    }

    #[test]
    fn warped_curvature_is_antisymmetric(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let spec = specs::random_spec(&mut rng);
        let x = specs::random_point(&spec, &mut rng);
        let n = spec.n();
        let (a, b) = (linalg::gaussian_vector(n, &mut rng), linalg::gaussian_vector(n, &mut rng));
        let g = spec.metric(&x).unwrap();
        prop_assert!((&g - g.transpose()).amax() <= 1e-12);
        prop_assert!(g.clone().cholesky().is_some());
        let rab = spec.curvature_operator(&x, &a, &b).unwrap();
        let rba = spec.curvature_operator(&x, &b, &a).unwrap();
        prop_assert!((rab + rba).amax() <= 1e-9);
    }
}
