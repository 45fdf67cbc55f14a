//! Seeded instance generators for the command-line tool and the tests.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::HarnessError;
use crate::forms::SymmetricBilinearForm;
use crate::immersions::composition::builtin as comps;
use crate::immersions::{FactorMap, ImmersionDoc, OuterMap, PlaneCurve, PolyTerm, PolynomialMap, SampleSpec, WarpedComposition};
use crate::linalg;
use crate::spaceforms::RepresentationDoc;

/// Structural families of the nullity corpus.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub enum FormFamily {
    /// Diagonal operators with random zero patterns, then rotated in `V` and `W`.
    SparseDiagonal,
    /// Combinations of a few shared rank-one terms.
    SharedRankOne,
    /// A generic block plus a planted common kernel.
    PlantedKernel,
    /// I.i.d. Gaussian entries.
    Gaussian,
}

impl FormFamily {
    pub const ALL: [FormFamily; 4] = [Self::SparseDiagonal, Self::SharedRankOne, Self::PlantedKernel, Self::Gaussian];
}

fn symmetrized(m: DMatrix<f64>) -> DMatrix<f64> {
    (&m + m.transpose()) * 0.5
}

fn rotated(ops: Vec<DMatrix<f64>>, rng: &mut ChaCha8Rng) -> SymmetricBilinearForm {
    let (n, p) = (ops[0].nrows(), ops.len());
    let q = linalg::random_orthogonal(n, rng);
    let o = linalg::random_orthogonal(p, rng);
    let f = SymmetricBilinearForm::new(ops, 1e-12).expect("symmetric").conjugate(&q).rotate_values(&o);
    SymmetricBilinearForm::new(f.ops().iter().cloned().map(symmetrized).collect(), 1e-12).expect("symmetric")
}

/// Random form of the given family.
pub fn random_form(n: usize, p: usize, family: FormFamily, rng: &mut ChaCha8Rng) -> SymmetricBilinearForm {
    match family {
        FormFamily::SparseDiagonal => {
            let ops = (0..p)
                .map(|_| {
                    let d: Vec<f64> =
                        (0..n).map(|_| if rng.random_bool(0.5) { 0.0 } else { rng.random_range(0.5..2.0) * sign(rng) }).collect();
                    DMatrix::from_diagonal(&DVector::from_vec(d))
                })
                .collect();
            rotated(ops, rng)
        }
        FormFamily::SharedRankOne => {
            let terms = rng.random_range(1..=n.saturating_sub(2).max(1));
            let vs: Vec<DVector<f64>> = (0..terms).map(|_| linalg::gaussian_vector(n, rng)).collect();
            let ops = (0..p)
                .map(|_| {
                    let mut m = DMatrix::zeros(n, n);
                    for v in &vs {
                        if rng.random_bool(0.7) {
                            m += v * v.transpose() * linalg::gaussian_vector(1, rng)[0];
                        }
                    }
                    m
                })
                .collect();
            rotated(ops, rng)
        }
        FormFamily::PlantedKernel => {
            let k = rng.random_range(1..=(n / 2).max(1));
            let ops = (0..p)
                .map(|_| {
                    let mut m = DMatrix::zeros(n, n);
                    m.view_mut((0, 0), (n - k, n - k)).copy_from(&linalg::gaussian_symmetric(n - k, rng));
                    m
                })
                .collect();
            rotated(ops, rng)
        }
        FormFamily::Gaussian => {
            let ops = (0..p).map(|_| linalg::gaussian_symmetric(n, rng)).collect();
            SymmetricBilinearForm::new(ops, 1e-12).expect("symmetric")
        }
    }
}

fn sign(rng: &mut ChaCha8Rng) -> f64 {
    if rng.random_bool(0.5) {
        1.0
    } else {
        -1.0
    }
}

/// `count` forms with `p = 1 + i mod 3`, `n` in `max(2p, 3)..=8` and the
/// families in turn. Instance `i` depends only on `seed` and `i`.
pub fn nullity_corpus(seed: u64, count: usize) -> Vec<(FormFamily, SymmetricBilinearForm)> {
    (0..count)
        .map(|i| {
            let mut rng = ChaCha8Rng::seed_from_u64(linalg::derive_seed(seed, i as u64, 0x6e75));
            let p = 1 + i % 3;
            let n = rng.random_range((2 * p).max(3)..=8);
            let family = FormFamily::ALL[(i / 3) % FormFamily::ALL.len()];
            (family, random_form(n, p, family, &mut rng))
        })
        .collect()
}

/// A warped composition as a document, with its chart samples.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct RoundTripCase {
    pub name: String,
    pub immersion: ImmersionDoc,
    pub samples: SampleSpec,
}

impl RoundTripCase {
    pub fn composition(&self) -> Result<WarpedComposition, HarnessError> {
        self.immersion.composition()?.ok_or_else(|| HarnessError::Input(format!("{} is not a warped composition", self.name)))
    }

    /// The same immersion followed by a cylinder over a circle of radius 2,
    /// for flat ambients.
    pub fn cylinder_wrapped(&self) -> Result<Option<ImmersionDoc>, HarnessError> {
        let comp = self.composition()?;
        if comp.rep.c() != 0.0 {
            return Ok(None);
        }
        let dim_in = comp.rep.ambient().dim;
        Ok(Some(ImmersionDoc::Composition {
            inner: Box::new(self.immersion.clone()),
            outer: OuterMap::Cylinder { dim_in, axis: 0, curve: PlaneCurve::Circle { radius: 2.0 } },
        }))
    }
}

/// Converts a composition with polynomial factor maps into a document.
pub fn composition_doc(comp: &WarpedComposition) -> Result<ImmersionDoc, HarnessError> {
    let maps = comp
        .maps
        .iter()
        .map(|m| match m {
            FactorMap::Polynomial(p) => Ok(p.clone()),
            FactorMap::Custom { .. } => Err(HarnessError::Input("custom factor maps have no document form".into())),
        })
        .collect::<Result<Vec<_>, _>>()?;
    Ok(ImmersionDoc::WarpedComposition { representation: RepresentationDoc::from(&comp.rep), maps })
}

fn term(powers: Vec<u32>, coef: Vec<f64>) -> PolyTerm {
    PolyTerm { powers, coef }
}

fn jitter(rng: &mut ChaCha8Rng, lo: f64, hi: f64) -> f64 {
    rng.random_range(lo..hi) * sign(rng)
}

/// Profile `t ↦ (r(t) − 1, h(t))` with `r(0) = 1` and `h'(0) ≥ 0.7`.
fn random_profile(rng: &mut ChaCha8Rng) -> PolynomialMap {
    let terms = vec![
        term(vec![1], vec![jitter(rng, 0.1, 0.4), rng.random_range(0.7..1.2)]),
        term(vec![2], vec![jitter(rng, 0.05, 0.3), jitter(rng, 0.0, 0.3)]),
        term(vec![3], vec![jitter(rng, 0.0, 0.1), jitter(rng, 0.05, 0.2)]),
    ];
    PolynomialMap::new(1, 2, terms).expect("valid profile")
}

/// Height over `R^d` with a nonzero gradient at the origin (so that every
/// rotation direction bends) and a nondegenerate Hessian.
fn random_height(d: usize, rng: &mut ChaCha8Rng) -> PolynomialMap {
    let mut terms = Vec::new();
    for i in 0..d {
        let mut e = vec![0; d];
        e[i] = 1;
        terms.push(term(e.clone(), vec![jitter(rng, 0.3, 0.6)]));
        e[i] = 2;
        terms.push(term(e.clone(), vec![jitter(rng, 0.3, 0.8)]));
        e[i] = 3;
        terms.push(term(e, vec![jitter(rng, 0.0, 0.2)]));
    }
    if d == 2 {
        terms.push(term(vec![1, 1], vec![jitter(rng, 0.05, 0.3)]));
    }
    PolynomialMap::new(d, 1, terms).expect("valid height")
}

/// `count` warped compositions with `k ≤ 3` factors and `n ≤ 9` whose
/// second fundamental forms pass the nullity gate near the chart center,
/// cycling through four families: hypersurfaces of revolution, graphs
/// rotated about one to three axes in flat space, rotation hypersurfaces
/// of spheres, and a rotated curve times a graph hypersurface of a round
/// sphere factor (codimension 2, so the per-factor nullity bound is not
/// vacuous). Warped factors are circles, round spheres or hypersurfaces of
/// round spheres, so no factor splits further.
pub fn round_trip_corpus(seed: u64, count: usize) -> Vec<RoundTripCase> {
    (0..count)
        .map(|i| {
            let mut rng = ChaCha8Rng::seed_from_u64(linalg::derive_seed(seed, i as u64, 0x7274));
            let round = i / 4;
            let (name, comp) = match i % 4 {
                0 => {
                    let m1 = rng.random_range(2..=5);
                    (format!("revolution-{m1}"), comps::revolution(random_profile(&mut rng), m1).expect("valid"))
                }
                1 => {
                    let k = 1 + round % 3;
                    let m0 = k.max(2);
                    let mut dims = Vec::new();
                    let mut budget = 9 - (m0 - 1);
                    for j in 0..k {
                        let left = k - j - 1;
                        let d = rng.random_range(1..=(budget - left).min(3));
                        dims.push(d);
                        budget -= d;
                    }
                    if m0 - 1 + dims.iter().sum::<usize>() < 3 {
                        dims[0] += 3 - (m0 - 1 + dims.iter().sum::<usize>());
                    }
                    // distinct, well separated λ so that no two warpings are proportional
                    let lambdas: Vec<f64> = (0..k).map(|j| 0.5 + 0.4 * j as f64 + rng.random_range(0.0..0.2)).collect();
                    let h = random_height(m0 - 1, &mut rng);
                    (format!("rotations-{m0}-{dims:?}"), comps::flat_rotations(h, &lambdas, &dims).expect("valid"))
                }
                2 => {
                    let m1 = rng.random_range(2..=4);
                    let t = rng.random_range(0.4..0.9);
                    (format!("sphere-rotation-{m1}"), comps::sphere_rotation_hypersurface(m1, t))
                }
                _ => {
                    let d = rng.random_range(5..=7);
                    let lambda = rng.random_range(0.6..1.2);
                    let rot = comps::flat_rotations(random_height(1, &mut rng), &[lambda], &[d]).expect("valid");
                    let fiber = FactorMap::Polynomial(PolynomialMap::graph(&random_height(d - 1, &mut rng)));
                    let comp = WarpedComposition::new(rot.rep, vec![rot.maps[0].clone(), fiber]).expect("valid");
                    (format!("curve-times-sphere-graph-{d}"), comp)
                }
            };
            let immersion = composition_doc(&comp).expect("polynomial factor maps");
            let samples = SampleSpec::Box { count: 6, radius: 0.25, seed: linalg::derive_seed(seed, i as u64, 1) };
            RoundTripCase { name, immersion, samples }
        })
        .collect()
}
