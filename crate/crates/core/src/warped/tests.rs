use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::builtin::*;
use super::*;

fn v(x: &[f64]) -> DVector<f64> {
    DVector::from_row_slice(x)
}

fn basis(n: usize, i: usize) -> DVector<f64> {
    let mut e = DVector::zeros(n);
    e[i] = 1.0;
    e
}

fn oracle(spec: &WarpedMetricSpec, x: &DVector<f64>) -> FdRiemann {
    fd_riemann(&|y: &DVector<f64>| spec.metric(y), x, 1e-4).unwrap()
}

#[test]
fn polar_angle_has_length_r() {
    let spec = polar_flat();
    let x = v(&[1.7, 0.4]);
    let e1 = basis(2, 1);
    assert!((spec.warped_inner(&x, &e1, &e1).unwrap() - 1.7f64.powi(2)).abs() < 1e-14);
}

#[test]
fn unit_warping_is_product_metric() {
    let spec = WarpedMetricSpec::new(
        vec![(1, FactorMetric::Euclidean), (2, FactorMetric::ConstantCurvature { kappa: 1.0 })],
        vec![Warping::constant(1, 1.0)],
    )
    .unwrap();
    let x = v(&[0.2, 0.1, -0.2]);
    let g = spec.metric(&x).unwrap();
    let g1 = FactorMetric::ConstantCurvature { kappa: 1.0 }.eval(&v(&[0.1, -0.2])).unwrap();
    assert_eq!(g[(0, 0)], 1.0);
    assert!((g.view((1, 1), (2, 2)) - &g1).amax() < 1e-15);
    // product connection: ∇ of base fields vanishes, factor Christoffels otherwise
    let u = v(&[0.0, 1.0, 0.0]);
    let w = v(&[0.0, 0.0, 1.0]);
    let nab = spec.connection(&x, &u, &w).unwrap();
    let gamma = FactorMetric::ConstantCurvature { kappa: 1.0 }.christoffel(&v(&[0.1, -0.2])).unwrap();
    assert!(nab[0].abs() < 1e-15);
    assert!((nab[1] - gamma[0][(0, 1)]).abs() < 1e-15);
    assert!((nab[2] - gamma[1][(0, 1)]).abs() < 1e-15);
}

#[test]
fn inner_product_matches_block_assembly() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for _ in 0..10 {
        let spec = random_spec(&mut rng);
        let x = random_point(&spec, &mut rng);
        let n = spec.n();
        let a = DVector::from_fn(n, |i, _| (i as f64 + 1.0) * 0.3);
        let b = DVector::from_fn(n, |i, _| 1.0 - i as f64 * 0.2);
        // oracle: Σ ⟨π₀a,π₀b⟩ + Σ ρⱼ² gⱼ(πⱼa, πⱼb)
        let rho = spec.rho(&x).unwrap();
        let mut expected = 0.0;
        for j in 0..spec.dims().len() {
            let (o, d) = (spec.offset(j), spec.dims()[j]);
            let gj = spec.metrics()[j].eval(&spec.factor_coords(&x, j)).unwrap();
            let w = if j == 0 { 1.0 } else { rho[j - 1].powi(2) };
            expected += w * a.rows(o, d).dot(&(gj * b.rows(o, d)));
        }
        let got = spec.warped_inner(&x, &a, &b).unwrap();
        assert!((got - expected).abs() < 1e-12);
        assert!((got - spec.warped_inner(&x, &b, &a).unwrap()).abs() < 1e-12);
        let got2 = spec.warped_inner(&x, &(&a * 2.0 + &b), &b).unwrap();
        assert!((got2 - 2.0 * got - spec.warped_inner(&x, &b, &b).unwrap()).abs() < 1e-11);
    }
}

#[test]
fn out_of_domain_is_reported() {
    let spec = polar_flat();
    assert!(matches!(spec.metric(&v(&[-0.5, 0.0])), Err(WarpedError::OutOfDomain { .. })));
    let hyp = WarpedMetricSpec::new(vec![(2, FactorMetric::ConstantCurvature { kappa: -1.0 })], vec![]).unwrap();
    assert!(matches!(hyp.metric(&v(&[1.0, 0.5])), Err(WarpedError::OutOfDomain { .. })));
    assert!(matches!(spec.metric(&v(&[1.0])), Err(WarpedError::DimensionMismatch { .. })));
}

#[test]
fn mixed_factor_connection_vanishes_and_base_derivative_scales() {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let spec = dependent_warpings();
    let x = random_point(&spec, &mut rng);
    let n = spec.n();
    let pd = spec.at(&x).unwrap();
    let fd = oracle(&spec, &x);
    let fd_conn = |a: &DVector<f64>, b: &DVector<f64>| DVector::from_fn(n, |c, _| a.dot(&(&fd.christoffel()[c] * b)));
    // ∇_U V = 0 for U ∈ TM₁, V ∈ TM₃ (Euclidean factors, constant fields)
    let u = basis(n, 2);
    let w = basis(n, 4);
    assert!(spec.connection_at(&pd, &u, &w).amax() < 1e-15);
    assert!(fd_conn(&u, &w).amax() < 1e-6);
    // ∇_X U = ∇_U X = −⟨η₁, X⟩ U
    let xb = v(&[0.6, -0.8, 0.0, 0.0, 0.0, 0.0]);
    let eta1 = &pd.eta[0];
    let expected = &u * (-(xb.rows(0, 2).dot(eta1)));
    assert!((spec.connection_at(&pd, &xb, &u) - &expected).amax() < 1e-12);
    assert!((spec.connection_at(&pd, &u, &xb) - &expected).amax() < 1e-12);
    assert!((fd_conn(&xb, &u) - &expected).amax() < 1e-6);
}

#[test]
fn connection_matches_fd_christoffels_on_random_specs() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..10 {
        let spec = random_spec(&mut rng);
        let x = random_point(&spec, &mut rng);
        let n = spec.n();
        let fd = fd_christoffel(&|y: &DVector<f64>| spec.metric(y), &x, 1e-5).unwrap();
        for i in 0..n {
            for j in 0..n {
                let got = spec.connection(&x, &basis(n, i), &basis(n, j)).unwrap();
                for c in 0..n {
                    assert!((got[c] - fd[c][(i, j)]).abs() < 1e-7, "Γ^{c}_{i}{j}: {} vs {}", got[c], fd[c][(i, j)]);
                }
            }
        }
    }
}

#[test]
fn eta_is_minus_gradient_of_log() {
    let spec = dependent_warpings();
    let x0 = v(&[0.2, -0.1]);
    let w = &spec.warpings()[2];
    let h = 1e-6;
    let logrho = |p: &DVector<f64>| w.value(p).ln();
    let fd = DVector::from_fn(2, |i, _| {
        let (mut a, mut b) = (x0.clone(), x0.clone());
        a[i] += h;
        b[i] -= h;
        -(logrho(&a) - logrho(&b)) / (2.0 * h)
    });
    assert!((spec.eta(3, &x0).unwrap() - fd).amax() < 1e-8);
}

#[test]
fn polar_plane_is_flat() {
    let spec = polar_flat();
    let x = v(&[1.3, 0.7]);
    let r = spec.curvature_operator(&x, &basis(2, 0), &basis(2, 1)).unwrap();
    assert!(r.amax() <= 1e-8);
    let spec3 = spherical_flat();
    let x3 = v(&[0.9, 0.2, -0.3]);
    for (i, j) in [(0, 1), (0, 2), (1, 2)] {
        assert!(spec3.curvature_operator(&x3, &basis(3, i), &basis(3, j)).unwrap().amax() <= 1e-8);
    }
}

#[test]
fn horospherical_plane_has_curvature_minus_one() {
    let spec = horospherical();
    for t in [-1.0, 0.0, 0.8] {
        let x = v(&[t, 0.3]);
        let k = spec.sectional_curvature(&x, &basis(2, 0), &basis(2, 1)).unwrap();
        assert!((k + 1.0).abs() <= 1e-12, "{k}");
    }
}

#[test]
fn curvature_matches_fd_riemann() {
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    for _ in 0..10 {
        let spec = random_spec(&mut rng);
        let x = random_point(&spec, &mut rng);
        let n = spec.n();
        let fd = oracle(&spec, &x);
        for i in 0..n {
            for j in 0..n {
                let got = spec.curvature_operator(&x, &basis(n, i), &basis(n, j)).unwrap();
                let want = fd.apply(&basis(n, i), &basis(n, j));
                assert!((&got - &want).amax() < 1e-4, "{:?}\n{got}\n{want}", spec);
            }
        }
    }
}

#[test]
fn curvature_tensor_symmetries() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for _ in 0..5 {
        let spec = random_spec(&mut rng);
        let x = random_point(&spec, &mut rng);
        let n = spec.n();
        let pd = spec.at(&x).unwrap();
        let ops: Vec<Vec<DMatrix<f64>>> =
            (0..n).map(|i| (0..n).map(|j| spec.curvature_at(&pd, &basis(n, i), &basis(n, j)).unwrap()).collect()).collect();
        let r4 = |a: usize, b: usize, c: usize, d: usize| (&ops[a][b] * basis(n, c)).dot(&(&pd.metric * basis(n, d)));
        for a in 0..n {
            for b in 0..n {
                assert!((&ops[a][b] + &ops[b][a]).amax() < 1e-8);
                for c in 0..n {
                    for d in 0..n {
                        assert!((r4(a, b, c, d) + r4(a, b, d, c)).abs() < 1e-8);
                        assert!((r4(a, b, c, d) - r4(c, d, a, b)).abs() < 1e-8);
                        assert!((r4(a, b, c, d) + r4(b, c, a, d) + r4(c, a, b, d)).abs() < 1e-8);
                    }
                }
            }
        }
    }
}

#[test]
fn mixed_curvature_pattern_vanishes() {
    // R(X,Y,Z,U) = R(X,Y,U,V) = R(X,U,V,W) = 0 for X,Y,Z ∈ TM₀ and U,V,W warped
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    for _ in 0..5 {
        let spec = random_spec(&mut rng);
        let x = random_point(&spec, &mut rng);
        let n = spec.n();
        let n0 = spec.dims()[0];
        let pd = spec.at(&x).unwrap();
        let r4 = |a: usize, b: usize, c: usize, d: usize| {
            (spec.curvature_at(&pd, &basis(n, a), &basis(n, b)).unwrap() * basis(n, c)).dot(&(&pd.metric * basis(n, d)))
        };
        let base: Vec<usize> = (0..n0).collect();
        let warped: Vec<usize> = (n0..n).collect();
        for &a in &base {
            for &b in &base {
                for &c in &base {
                    for &u in &warped {
                        assert!(r4(a, b, c, u).abs() < 1e-8);
                    }
                }
                for &u in &warped {
                    for &w in &warped {
                        assert!(r4(a, b, u, w).abs() < 1e-8);
                    }
                }
            }
            for &u in &warped {
                for &w in &warped {
                    for &z in &warped {
                        assert!(r4(a, u, w, z).abs() < 1e-8);
                    }
                }
            }
        }
    }
}

#[test]
fn connection_is_metric_compatible() {
    let mut rng = ChaCha8Rng::seed_from_u64(31);
    for _ in 0..5 {
        let spec = random_spec(&mut rng);
        let x = random_point(&spec, &mut rng);
        let n = spec.n();
        let dir = DVector::from_fn(n, |i, _| 0.3 + 0.1 * i as f64);
        let a = DVector::from_fn(n, |i, _| (i as f64 - 1.0) * 0.4);
        let b = DVector::from_fn(n, |i, _| 1.0 / (1.0 + i as f64));
        let h = 1e-5;
        let lhs = (spec.warped_inner(&(&x + &dir * h), &a, &b).unwrap() - spec.warped_inner(&(&x - &dir * h), &a, &b).unwrap()) / (2.0 * h);
        let rhs = spec.warped_inner(&x, &spec.connection(&x, &dir, &a).unwrap(), &b).unwrap()
            + spec.warped_inner(&x, &a, &spec.connection(&x, &dir, &b).unwrap()).unwrap();
        assert!((lhs - rhs).abs() < 1e-5);
    }
}

#[test]
fn grouping_examples() {
    let spec = dependent_warpings();
    let grid: Vec<DVector<f64>> = (0..5).flat_map(|i| (0..5).map(move |j| v(&[0.1 * i as f64 - 0.2, 0.1 * j as f64 - 0.2]))).collect();
    let g = group_warpings(&spec, &grid, 1e-9).unwrap();
    assert_eq!(g.groups, vec![vec![1, 2], vec![3]]);
    assert!((g.lambdas[1] - 2.0).abs() <= 1e-9);
    // ρ, ρ², e^x pairwise independent
    let indep = WarpedMetricSpec::euclidean(
        &[1, 1, 1, 1],
        vec![
            Warping::Affine { a: 1.0, b: v(&[0.5]) },
            Warping::Polynomial { dim: 1, terms: vec![Monomial { coef: 1.0, powers: vec![0] }, Monomial { coef: 1.0, powers: vec![1] }, Monomial { coef: 0.25, powers: vec![2] }] },
            Warping::Exponential { a: 1.0, b: v(&[1.0]), c: 0.0 },
        ],
    )
    .unwrap();
    let line: Vec<DVector<f64>> = (0..7).map(|i| v(&[0.1 * i as f64])).collect();
    assert_eq!(group_warpings(&indep, &line, 1e-6).unwrap().groups, vec![vec![1], vec![2], vec![3]]);
}

#[test]
fn noisy_proportional_samples_are_grouped() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let base: Vec<f64> = (0..20).map(|i| 1.0 + (0.1 * i as f64).sin()).collect();
    let noisy: Vec<f64> = base.iter().map(|b| 3.0 * b + 1e-9 * linalg_noise(&mut rng)).collect();
    let g = group_warping_samples(&[base, noisy], 1e-6).unwrap();
    assert_eq!(g.groups, vec![vec![1, 2]]);
    assert!((g.lambdas[1] - 3.0).abs() < 1e-8);
    // residual oracle: the least-squares residual is of the order of the noise
    assert!(g.max_residual < 1e-8);
}

fn linalg_noise(rng: &mut ChaCha8Rng) -> f64 {
    crate::linalg::gaussian_vector(1, rng)[0]
}

#[test]
fn grouping_is_a_partition_and_permutation_invariant() {
    let samples = vec![vec![1.0, 2.0, 3.0], vec![2.0, 1.0, 0.5], vec![3.0, 6.0, 9.0], vec![4.0, 2.0, 1.0], vec![1.0, 1.0, 1.0]];
    let g = group_warping_samples(&samples, 1e-9).unwrap();
    assert_eq!(g.groups, vec![vec![1, 3], vec![2, 4], vec![5]]);
    let perm = [4, 2, 0, 3, 1];
    let permuted: Vec<Vec<f64>> = perm.iter().map(|&i| samples[i].clone()).collect();
    let h = group_warping_samples(&permuted, 1e-9).unwrap();
    let mut relabeled: Vec<Vec<usize>> = h.groups.iter().map(|grp| {
        let mut m: Vec<usize> = grp.iter().map(|&i| perm[i - 1] + 1).collect();
        m.sort_unstable();
        m
    }).collect();
    relabeled.sort();
    assert_eq!(relabeled, g.groups);
}

#[test]
fn degenerate_grids_rejected() {
    let spec = dependent_warpings();
    assert!(matches!(group_warpings(&spec, &[v(&[0.0, 0.0])], 1e-9), Err(WarpedError::DegenerateGrid(_))));
    assert!(matches!(group_warpings(&spec, &[v(&[0.1, 0.0]), v(&[0.1, 0.0])], 1e-9), Err(WarpedError::DegenerateGrid(_))));
}

#[test]
fn constancy_threshold() {
    assert!(is_constant(&[2.0, 2.0 + 1e-9, 2.0], CONSTANCY_TOL));
    assert!(!is_constant(&[2.0, 2.0 + 1e-6, 2.0], CONSTANCY_TOL));
}

#[test]
fn document_round_trip() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    for _ in 0..6 {
        let spec = random_spec(&mut rng);
        let doc = WarpedSpecDoc::try_from(&spec).unwrap();
        let json = serde_json::to_string(&doc).unwrap();
        let back: WarpedSpecDoc = serde_json::from_str(&json).unwrap();
        let rebuilt = back.build().unwrap();
        let x = random_point(&spec, &mut rng);
        assert!((spec.metric(&x).unwrap() - rebuilt.metric(&x).unwrap()).amax() < 1e-12);
    }
    let bad: WarpedSpecDoc = serde_json::from_str(r#"{"factors":[{"dim":1,"metric":{"kind":"sphere","curvature":-1}}],"warpings":[]}"#).unwrap();
    assert!(matches!(bad.build(), Err(WarpedError::InvalidSpec(_))));
}
