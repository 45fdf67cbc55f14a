use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::composition::builtin as comps;
use super::*;
use crate::forms::NullityConfig;
use crate::linalg;

fn v(xs: &[f64]) -> DVector<f64> {
    DVector::from_column_slice(xs)
}

fn fd_config() -> NullityConfig {
    NullityConfig { rank_tol: 1e-5, ..NullityConfig::default() }
}

fn poly(n: usize, m: usize, terms: &[(&[u32], &[f64])]) -> PolynomialMap {
    PolynomialMap::new(n, m, terms.iter().map(|(p, c)| PolyTerm { powers: p.to_vec(), coef: c.to_vec() }).collect()).unwrap()
}

fn builtin_compositions() -> Vec<(&'static str, WarpedComposition)> {
    vec![
        ("revolution surface", comps::revolution_surface()),
        ("clifford curves", comps::clifford_curves()),
        ("sphere rotation", comps::sphere_rotation_hypersurface(2, 0.6)),
        ("horosphere pair", comps::horosphere_pair(1, 2)),
        (
            "flat rotations",
            comps::flat_rotations(poly(1, 1, &[(&[2], &[0.4]), (&[3], &[-0.2])]), &[0.5, 0.3], &[2, 1]).unwrap(),
        ),
    ]
}

fn samples_for(comp: &WarpedComposition, count: usize, seed: u64) -> Vec<DVector<f64>> {
    box_samples(comp.n(), count, 0.3, seed)
}

#[test]
fn affine_map_has_zero_alpha() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let a = linalg::random_frame(5, 3, &mut rng);
    let f = builtin::affine(&a, &v(&[1.0, 0.0, -2.0, 0.5, 0.0]));
    let (gram, data) = fundamental_forms(&f, &v(&[0.2, -0.1, 0.4])).unwrap();
    assert!((gram - DMatrix::identity(3, 3)).amax() < 1e-12);
    assert!(data.form.ops().iter().all(|m| m.amax() < 1e-12));
    let report = pointwise_nullities(&f, &v(&[0.0, 0.0, 0.0]), &fd_config()).unwrap();
    assert_eq!(report.values, vec![3, 3]);
}

#[test]
fn unit_sphere_chart_is_umbilic() {
    for f in [builtin::sphere_chart(2, 1.0), builtin::sphere_chart(2, 1.0).without_oracles()] {
        let x = v(&[0.3, -0.2]);
        let (_, data) = fundamental_forms(&f, &x).unwrap();
        let a = &data.form.ops()[0];
        let sign = a[(0, 0)].signum();
        assert!((a * sign - DMatrix::identity(2, 2)).amax() < 1e-6, "{a}");
        let report = nullity_profile(&data.form, &fd_config()).unwrap();
        assert_eq!(report.values, vec![0]);
    }
}

#[test]
fn saddle_alpha_at_origin() {
    let f = builtin::saddle();
    let (_, data) = fundamental_forms(&f, &v(&[0.0, 0.0])).unwrap();
    let a = &data.form.ops()[0] * data.normal_frame[(2, 0)];
    assert!((a - DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 1.0, 0.0])).amax() < 1e-12);
    let (_, fd) = fundamental_forms(&f.clone().without_oracles(), &v(&[0.0, 0.0])).unwrap();
    assert!((fd.form.ops()[0].abs() - data.form.ops()[0].abs()).amax() < 1e-6);
}

#[test]
fn normal_frame_excludes_position() {
    let f = builtin::great_sphere(2);
    let x = v(&[0.2, 0.4]);
    let (_, data) = fundamental_forms(&f, &x).unwrap();
    assert_eq!(data.normal_frame.ncols(), 1);
    assert!(data.normal_frame.column(0).dot(&data.point).abs() < 1e-12);
    assert!(data.form.ops()[0].amax() < 1e-6);
}

#[test]
fn rank_deficient_jacobian_is_rejected() {
    let f = NumericalImmersion::new(2, crate::spaceforms::SpaceForm::new(0.0, 3), |x| Ok(v(&[x[0] + x[1], 0.0, 0.0])));
    assert!(matches!(fundamental_forms(&f, &v(&[0.1, 0.1])), Err(ImmersionError::RankDeficientJacobian { .. })));
}

#[test]
fn cylinder_has_one_dimensional_relative_nullity() {
    let id = NumericalImmersion::from_polynomial(PolynomialMap::identity(2));
    let cyl = make_composition(&id, &OuterMap::Cylinder { dim_in: 2, axis: 0, curve: PlaneCurve::Circle { radius: 0.8 } }).unwrap();
    let report = pointwise_nullities(&cyl, &v(&[0.3, 0.1]), &fd_config()).unwrap();
    assert_eq!(report.values, vec![1]);
}

#[test]
fn composition_formula_matches_oracle_and_fd() {
    // α^{g∘f}(X,Y) = g_*α^f(X,Y) + (f_*X)_k (f_*Y)_k γ''
    let f = builtin::saddle();
    let curve = PlaneCurve::Circle { radius: 1.5 };
    let g = OuterMap::Cylinder { dim_in: 3, axis: 1, curve };
    let h = make_composition(&f, &g).unwrap();
    let x = v(&[0.2, -0.3]);
    let y = f.point(&x).unwrap();
    let jf = f.jacobian(&x).unwrap();
    let hf = f.second_derivatives(&x).unwrap();
    let dg = g.jacobian(&y);
    let (ax, ay) = curve.acceleration(y[1]);
    let hh = h.second_derivatives(&x).unwrap();
    let hfd = h.fd_second_derivatives(&x, 1e-3).unwrap();
    for i in 0..2 {
        for j in 0..2 {
            let mut expected = &dg * &hf[i][j];
            let s = jf[(1, i)] * jf[(1, j)];
            expected[1] += ax * s;
            expected[3] += ay * s;
            assert!((&hh[i][j] - &expected).amax() < 1e-12);
            assert!((&hfd[i][j] - &expected).amax() < 1e-6);
        }
    }
    let pulled = h.ambient().gram(&h.jacobian(&x).unwrap(), &h.jacobian(&x).unwrap());
    assert!((pulled - jf.transpose() * &jf).amax() < 1e-12, "outer map is isometric");
}

#[test]
fn linear_inclusion_preserves_alpha() {
    let f = builtin::saddle();
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let l = linalg::random_frame(5, 3, &mut rng);
    let g = OuterMap::LinearInclusion {
        dim_in: 3,
        dim_out: 5,
        matrix: l.transpose().iter().copied().collect(),
        offset: vec![0.0; 5],
    };
    let h = make_composition(&f, &g).unwrap();
    let x = v(&[0.1, 0.25]);
    let (_, a) = fundamental_forms(&f, &x).unwrap();
    let (_, b) = fundamental_forms(&h, &x).unwrap();
    // two extra normal directions with A = 0: ν_{s+2}(g∘f) = ν_s(f)
    let na = pointwise_nullities(&f, &x, &fd_config()).unwrap();
    let nb = pointwise_nullities(&h, &x, &fd_config()).unwrap();
    assert_eq!(nb.values, vec![2, 2, na.values[0]]);
    let norm = |d: &SecondFundamentalData| d.form.ops().iter().map(|m| m.norm_squared()).sum::<f64>();
    assert!((norm(&a) - norm(&b)).abs() < 1e-10);
}

#[test]
fn outer_maps_need_flat_matching_domain() {
    let s = builtin::great_sphere(2);
    let g = OuterMap::Cylinder { dim_in: 4, axis: 0, curve: PlaneCurve::Circle { radius: 1.0 } };
    assert!(matches!(make_composition(&s, &g), Err(ImmersionError::DomainMismatch(_))));
    let f = builtin::saddle();
    assert!(matches!(make_composition(&f, &g), Err(ImmersionError::DomainMismatch(_))));
}

#[test]
fn factor_target_mismatch() {
    let rep = crate::spaceforms::builtin::rotation(2);
    let err = WarpedComposition::new(rep, vec![FactorMap::identity(1), FactorMap::identity(3)]).unwrap_err();
    assert_eq!(err, ImmersionError::FactorTargetMismatch { factor: 1, expected: 2, got: 3 });
}

#[test]
fn identity_factors_give_psi() {
    let comp = comps::clifford_identity();
    let x = v(&[0.2, 0.5, -0.3]);
    let direct = comp.rep.psi_chart(&x).unwrap();
    assert!((comp.immersion().point(&x).unwrap() - direct).amax() < 1e-15);
}

#[test]
fn revolution_metric_is_warped() {
    let comp = comps::revolution_surface();
    let f = comp.immersion();
    for t in [-0.3, 0.0, 0.4] {
        let x = v(&[t, 0.7]);
        let (gram, _) = fundamental_forms(&f, &x).unwrap();
        let r = 1.0 + 0.3 * t + 0.2 * t * t;
        assert!((gram[(1, 1)] - r * r).abs() < 1e-8, "{gram}");
        assert!(gram[(0, 1)].abs() < 1e-8);
    }
}

#[test]
fn pullback_matches_warped_spec() {
    for (name, comp) in builtin_compositions() {
        let f = comp.immersion();
        let spec = comp.warped_spec().unwrap();
        for x in samples_for(&comp, 10, 7) {
            let (gram, _) = fundamental_forms(&f, &x).unwrap();
            let expected = spec.metric(&x).unwrap();
            assert!((&gram - &expected).amax() < 1e-6, "{name}: {}", (&gram - &expected).amax());
        }
    }
}

#[test]
fn warped_compositions_are_adapted_and_match_nolker() {
    for (name, comp) in builtin_compositions() {
        let samples = samples_for(&comp, 12, 11);
        let check = nolker_alpha_check(&comp, &samples).unwrap();
        assert!(check.max_mixed <= 1e-5, "{name}: mixed {:e}", check.max_mixed);
        assert!(check.max_residual <= 1e-5, "{name}: residual {:e}", check.max_residual);
    }
}

#[test]
fn nolker_check_sees_a_wrong_warping() {
    // same maps, but the representation's z is scaled: the assembled α no
    // longer matches the direct one of the original composition
    let comp = comps::revolution_surface();
    let samples = samples_for(&comp, 4, 3);
    let good = nolker_alpha_check(&comp, &samples).unwrap();
    let mut bad = comp.clone();
    bad.rep.a[0] *= 1.1;
    let check = nolker_alpha_check(&bad, &samples).unwrap();
    assert!(good.max_residual < 1e-5 && check.max_residual > 1e-3);
}

#[test]
fn codazzi_residuals() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let a = linalg::random_frame(4, 2, &mut rng);
    assert!(codazzi_residual(&builtin::affine(&a, &DVector::zeros(4)), &v(&[0.1, 0.2]), 1e-3).unwrap() < 1e-9);
    let sphere = builtin::sphere_chart(2, 1.0).without_oracles();
    assert!(codazzi_residual(&sphere, &v(&[0.2, 0.1]), 1e-3).unwrap() <= 1e-3);
    let rev = comps::revolution_surface().immersion();
    assert!(codazzi_residual(&rev, &v(&[0.1, 0.3]), 1e-3).unwrap() <= 1e-3);
    // a non-immersion-derived family would fail: perturbing α by hand is not
    // possible here, so check the saddle as a second curved case
    assert!(codazzi_residual(&builtin::saddle(), &v(&[0.2, -0.1]), 1e-3).unwrap() <= 1e-3);
}

#[test]
fn gauss_equation_matches_warped_curvature() {
    let cases = vec![
        comps::revolution_surface(),
        comps::flat_rotations(poly(1, 1, &[(&[2], &[0.4]), (&[3], &[-0.2])]), &[0.5, 0.3], &[2, 1]).unwrap(),
        comps::sphere_rotation_hypersurface(2, 0.6),
    ];
    for comp in cases {
        let f = comp.immersion();
        let spec = comp.warped_spec().unwrap();
        let c = comp.rep.c();
        for x in samples_for(&comp, 3, 5) {
            let (_, data) = fundamental_forms(&f, &x).unwrap();
            let n = comp.n();
            let e = |i: usize| DVector::from_fn(n, |k, _| if k == i { 1.0 } else { 0.0 });
            let frame = |i: usize| data.chart_frame.column(i).into_owned();
            for (i, j, k, l) in [(0, 1, 1, 0), (0, 1, 0, 1), (0, 2, 2, 0), (1, 2, 2, 1), (0, 1, 2, 0)] {
                if l.max(k).max(i).max(j) >= n {
                    continue;
                }
                let gauss = data.form.gauss_tensor(&e(i), &e(j), &e(k), &e(l)).unwrap();
                let delta = |a: usize, b: usize| if a == b { 1.0 } else { 0.0 };
                let ambient = c * (delta(i, l) * delta(j, k) - delta(i, k) * delta(j, l));
                let intrinsic = spec.curvature_form(&x, &frame(i), &frame(j), &frame(k), &frame(l)).unwrap();
                assert!((gauss + ambient - intrinsic).abs() < 1e-4, "{} vs {}", gauss + ambient, intrinsic);
            }
        }
    }
}

#[test]
fn decompose_recovers_revolution() {
    let profile = poly(1, 2, &[(&[1], &[0.3, 1.0]), (&[2], &[0.2, 0.0]), (&[3], &[0.0, -0.1])]);
    let comp = comps::revolution(profile, 3).unwrap();
    let f = comp.immersion();
    let samples = samples_for(&comp, 8, 21);
    let result = decompose(&f, &samples, &DecomposeConfig::default()).unwrap();
    assert_eq!(result.base, vec![0]);
    assert_eq!(result.block_dims, vec![1, 3]);
    let star = comp.rho(&DVector::zeros(1))[0];
    for (x, r) in samples.iter().zip(&result.factors[0].rho) {
        let truth = comp.rho(&x.rows(0, 1).into_owned())[0] / star;
        assert!((r - truth).abs() < 1e-6);
    }
    assert!(result.claims_hold());
    assert_eq!(result.claims[0].cod, 0);
    assert!(result.claims[0].spherical_leaf);
    assert_eq!(result.base_cod, Some(1));
    assert_eq!(result.cod_sum, result.p);
}

#[test]
fn decompose_merges_equal_warpings() {
    let comp = comps::horosphere_pair(2, 2);
    let samples = samples_for(&comp, 8, 3);
    let result = decompose(&comp.immersion(), &samples, &DecomposeConfig::default()).unwrap();
    // flat horosphere factors with diagonal chart metrics split into lines;
    // equal warpings merge them back
    assert_eq!(result.block_dims, vec![1, 1, 1, 1, 1]);
    let groups = result.warping_groups.as_ref().unwrap();
    assert_eq!(groups.groups, vec![vec![1, 2, 3, 4]]);
    assert!(groups.lambdas.iter().all(|l| (l - 1.0).abs() < 1e-9));
    assert_eq!(result.claims.len(), 1);
    assert_eq!(result.claims[0].ell, 4);
    assert!(result.claims_hold());
}

#[test]
fn decompose_product_of_hypersurfaces() {
    let h0 = poly(3, 1, &[(&[2, 0, 0], &[0.5]), (&[0, 2, 0], &[-0.3]), (&[0, 0, 2], &[0.8]), (&[1, 1, 0], &[0.2])]);
    let h1 = poly(3, 1, &[(&[2, 0, 0], &[-0.6]), (&[0, 2, 0], &[0.4]), (&[0, 0, 2], &[0.7]), (&[0, 1, 1], &[0.3])]);
    let comp = comps::product_of_graphs(h0.clone(), h1.clone()).unwrap();
    let f = comp.immersion();
    let samples = samples_for(&comp, 6, 9);
    let result = decompose(&f, &samples, &DecomposeConfig::default()).unwrap();
    assert!(result.base.is_empty());
    assert_eq!(result.block_dims, vec![3, 3]);
    assert!(result.factors.iter().all(|w| w.constant));
    // slices agree with the inputs up to a rigid motion: compare distances
    let star = DVector::zeros(6);
    for (i, h) in [h0, h1].iter().enumerate() {
        let coords: Vec<usize> = (3 * i..3 * i + 3).collect();
        let sl = factor_slice(&f, &star, &coords);
        let input = NumericalImmersion::from_polynomial(PolynomialMap::graph(h));
        let pts: Vec<DVector<f64>> = samples.iter().map(|x| x.rows(3 * i, 3).into_owned()).collect();
        for a in &pts {
            for b in &pts {
                let d1 = (sl.point(a).unwrap() - sl.point(b).unwrap()).norm();
                let d2 = (input.point(a).unwrap() - input.point(b).unwrap()).norm();
                assert!((d1 - d2).abs() < 1e-12);
            }
        }
    }
}

#[test]
fn decompose_rejects_cylinder_wrapped_composition() {
    let profile = poly(1, 2, &[(&[1], &[0.3, 1.0]), (&[2], &[0.2, 0.0])]);
    let comp = comps::revolution(profile, 4).unwrap();
    let g = OuterMap::Cylinder { dim_in: 6, axis: 5, curve: PlaneCurve::Circle { radius: 1.3 } };
    let wrapped = make_composition(&comp.immersion(), &g).unwrap();
    let samples = samples_for(&comp, 4, 1);
    match decompose(&wrapped, &samples, &DecomposeConfig::default()) {
        Err(ImmersionError::HypothesisViolated { s, .. }) => assert_eq!(s, 1),
        other => panic!("expected a violation, got {other:?}"),
    }
}

#[test]
fn declared_groups_are_checked_when_gate_skipped() {
    let comp = comps::revolution_surface();
    let f = make_composition(
        &comp.immersion(),
        &OuterMap::Cylinder { dim_in: 3, axis: 2, curve: PlaneCurve::Circle { radius: 0.7 } },
    )
    .unwrap();
    let config = DecomposeConfig { skip_gate: true, groups: Some(vec![vec![0], vec![1]]), ..DecomposeConfig::default() };
    let samples = samples_for(&comp, 4, 2);
    assert!(matches!(decompose(&f, &samples, &config), Err(ImmersionError::NotAdapted { .. })));
}

#[test]
fn immersion_doc_round_trip() {
    let doc = ImmersionDoc::Composition {
        inner: Box::new(ImmersionDoc::GraphPolynomial { height: poly(2, 1, &[(&[1, 1], &[1.0])]) }),
        outer: OuterMap::Cylinder { dim_in: 3, axis: 0, curve: PlaneCurve::Circle { radius: 2.0 } },
    };
    let text = serde_json::to_string(&doc).unwrap();
    assert!(text.contains("\"family\":\"composition\""));
    let back: ImmersionDoc = serde_json::from_str(&text).unwrap();
    assert_eq!(back, doc);
    let f = back.build().unwrap();
    assert_eq!(f.space().ambient_dim(), 4);
    let rev = ImmersionDoc::Revolution { profile: poly(1, 2, &[(&[1], &[0.0, 1.0])]), sphere_dim: 1 };
    let text = serde_json::to_string(&rev).unwrap();
    assert!(text.contains("\"family\":\"revolution\""));
    assert!(serde_json::from_str::<ImmersionDoc>(&text).unwrap().composition().unwrap().is_some());
}
