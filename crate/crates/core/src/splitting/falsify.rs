//! Randomized search for counterexamples to the splitting lemma.
//!
//! Write `β` in a two-block basis as diagonal blocks `P = β|V₁×V₁`,
//! `Q = β|V₂×V₂` and mixed block `M = β|V₁×V₂`. In these terms the three
//! vanishing patterns read
//!
//! ```text
//! Σₐ Mᵃᵢₗ Pᵃⱼₖ − Pᵃᵢₖ Mᵃⱼₗ = 0,   Σₐ Mᵃᵢₗ Mᵃⱼₖ − Mᵃᵢₖ Mᵃⱼₗ = 0,   Σₐ Mᵃᵢₗ Qᵃⱼₖ − Mᵃᵢₖ Qᵃⱼₗ = 0,
//! ```
//!
//! the outer two linear in `M`, the middle one quadratic. Random instances are
//! made to satisfy them by Gauss–Newton on `M` with `P`, `Q` fixed. Three
//! generator families are cycled through by trial index:
//!
//! * [`Family::PerturbedAdapted`]: generic `P`, `Q` and a small random `M`.
//! * [`Family::RandomProjected`]: `P`, `Q` of random (often deficient) rank
//!   and an `O(1)` random `M`, so that nonzero solutions can exist.
//! * [`Family::FlatMixed`]: an adapted form plus rank-one components
//!   `φφᵀ ξ` along new normal directions. The Gauss tensor of a rank-one
//!   component vanishes, so the conditions hold exactly while `S ≠ 0`; this is
//!   what composing with a cylinder does to a product immersion.
//!
//! A trial is *tested* when it satisfies the conditions and passes the
//! nullity gate. The default gate is the multistart search, whose values are
//! lower bounds, so it admits every trial the exact gate would admit and
//! possibly more. A tested trial with `‖S‖ > s_tol` is re-checked with the
//! exact sweep and only then counted as a violation.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{curvature_conditions, max_rank_direction, mixed_matrix, proof_steps_unchecked, OrthogonalSplitting};
use crate::forms::{hypothesis_gate, NullityConfig, NullityMode, SymmetricBilinearForm};
use crate::linalg;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub enum Family {
    PerturbedAdapted,
    RandomProjected,
    FlatMixed,
}

impl Family {
    pub const ALL: [Family; 3] = [Family::PerturbedAdapted, Family::RandomProjected, Family::FlatMixed];
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", default)]
pub struct FalsifyConfig {
    /// Nullity settings of the gate applied to every trial.
    pub gate: NullityConfig,
    /// Nullity settings used to re-check a candidate violation.
    pub recheck: NullityConfig,
    pub curvature_tol: f64,
    pub s_tol: f64,
    /// Gauss–Newton iterations of the projection.
    pub projection_iters: usize,
    pub direction_trials: usize,
    pub families: Vec<Family>,
}

impl Default for FalsifyConfig {
    fn default() -> Self {
        Self {
            gate: NullityConfig { mode: NullityMode::Search, starts: 8, ..NullityConfig::default() },
            recheck: NullityConfig { starts: 48, ..NullityConfig::default() },
            curvature_tol: 1e-8,
            s_tol: 1e-6,
            projection_iters: 200,
            direction_trials: 8,
            families: Family::ALL.to_vec(),
        }
    }
}

/// Counters and extremes for one generator family.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct FamilyStats {
    pub generated: usize,
    /// Trials whose projection did not reach `curvature_tol`.
    pub off_constraint: usize,
    /// On the constraint set but rejected by the nullity gate.
    pub gate_rejected: usize,
    /// Gate rejections with `‖S‖ > s_tol`: nonzero mixed span explained by the nullities.
    pub gate_rejected_mixed: usize,
    pub tested: usize,
    pub violations: usize,
    /// Largest `‖S‖` among tested trials.
    pub max_s_norm: f64,
    pub max_step_one: f64,
    pub max_step_two: f64,
    pub max_curvature: f64,
    /// Smallest `min_s (n − 2s − ν_s)` among tested trials.
    pub min_margin: Option<i64>,
    /// Tested trials with margin exactly 1.
    pub at_boundary: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct TrialOutcome {
    pub index: usize,
    pub family: Family,
    pub split: (usize, usize),
    pub curvature: f64,
    pub s_norm: f64,
    pub nullities: Option<Vec<usize>>,
    pub status: TrialStatus,
    pub step_one: Option<f64>,
    pub step_two: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub enum TrialStatus {
    OffConstraint,
    GateRejected,
    Tested,
    Violation,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct FalsifyReport {
    pub n: usize,
    pub p: usize,
    pub trials: usize,
    pub seed: u64,
    pub families: Vec<(Family, FamilyStats)>,
    pub tested: usize,
    pub violations: usize,
    /// Trial indices of violations, for replay.
    pub violating_trials: Vec<usize>,
}

impl FalsifyReport {
    pub fn max_s_norm(&self) -> f64 {
        self.families.iter().map(|(_, s)| s.max_s_norm).fold(0.0, f64::max)
    }

    pub fn max_step_residual(&self) -> f64 {
        self.families.iter().map(|(_, s)| s.max_step_one.max(s.max_step_two)).fold(0.0, f64::max)
    }

    pub fn stats(&self, family: Family) -> Option<&FamilyStats> {
        self.families.iter().find(|(f, _)| *f == family).map(|(_, s)| s)
    }
}

/// Random form in block coordinates together with its two-block split.
#[derive(Debug, Clone)]
pub struct Instance {
    pub family: Family,
    pub form: SymmetricBilinearForm,
    pub split: OrthogonalSplitting,
}

/// Diagonal and mixed blocks of one form.
struct Blocks {
    p: Vec<DMatrix<f64>>,
    q: Vec<DMatrix<f64>>,
    m: Vec<DMatrix<f64>>,
}

impl Blocks {
    fn assemble(&self) -> SymmetricBilinearForm {
        let (d1, d2) = (self.p[0].nrows(), self.q[0].nrows());
        let n = d1 + d2;
        let ops = (0..self.p.len())
            .map(|a| {
                let mut op = DMatrix::zeros(n, n);
                op.view_mut((0, 0), (d1, d1)).copy_from(&self.p[a]);
                op.view_mut((d1, d1), (d2, d2)).copy_from(&self.q[a]);
                op.view_mut((0, d1), (d1, d2)).copy_from(&self.m[a]);
                op.view_mut((d1, 0), (d2, d1)).copy_from(&self.m[a].transpose());
                op
            })
            .collect();
        SymmetricBilinearForm::new(ops, 0.0).expect("symmetric by construction")
    }
}

fn low_rank_symmetric<R: Rng + ?Sized>(d: usize, rank: usize, rng: &mut R) -> DMatrix<f64> {
    let mut out = DMatrix::zeros(d, d);
    for _ in 0..rank {
        let v = linalg::gaussian_vector(d, rng);
        let sign = if rng.random_bool(0.5) { 1.0 } else { -1.0 };
        out += &v * v.transpose() * sign;
    }
    out
}

/// Residuals of the three patterns on the reduced index sets, and the
/// Jacobian with respect to the entries of `M` (`a`, `i`, `l` row-major).
fn constraints(b: &Blocks, with_jacobian: bool) -> (DVector<f64>, Option<DMatrix<f64>>) {
    let p = b.p.len();
    let (d1, d2) = (b.p[0].nrows(), b.q[0].nrows());
    let idx = |a: usize, i: usize, l: usize| a * d1 * d2 + i * d2 + l;
    let pairs1 = d1 * (d1.saturating_sub(1)) / 2;
    let pairs2 = d2 * (d2.saturating_sub(1)) / 2;
    let rows = pairs1 * d1 * d2 + pairs1 * pairs2 + d1 * d2 * pairs2;
    let mut r = DVector::zeros(rows);
    let mut jac = with_jacobian.then(|| DMatrix::zeros(rows, p * d1 * d2));
    let mut row = 0;
    for i in 0..d1 {
        for j in (i + 1)..d1 {
            for k in 0..d1 {
                for l in 0..d2 {
                    let mut v = 0.0;
                    for a in 0..p {
                        v += b.m[a][(i, l)] * b.p[a][(j, k)] - b.p[a][(i, k)] * b.m[a][(j, l)];
                        if let Some(jac) = jac.as_mut() {
                            jac[(row, idx(a, i, l))] += b.p[a][(j, k)];
                            jac[(row, idx(a, j, l))] -= b.p[a][(i, k)];
                        }
                    }
                    r[row] = v;
                    row += 1;
                }
            }
            for k in 0..d2 {
                for l in (k + 1)..d2 {
                    let mut v = 0.0;
                    for a in 0..p {
                        let m = &b.m[a];
                        v += m[(i, l)] * m[(j, k)] - m[(i, k)] * m[(j, l)];
                        if let Some(jac) = jac.as_mut() {
                            jac[(row, idx(a, i, l))] += m[(j, k)];
                            jac[(row, idx(a, j, k))] += m[(i, l)];
                            jac[(row, idx(a, i, k))] -= m[(j, l)];
                            jac[(row, idx(a, j, l))] -= m[(i, k)];
                        }
                    }
                    r[row] = v;
                    row += 1;
                }
            }
        }
    }
    for i in 0..d1 {
        for j in 0..d2 {
            for k in 0..d2 {
                for l in (k + 1)..d2 {
                    let mut v = 0.0;
                    for a in 0..p {
                        v += b.m[a][(i, l)] * b.q[a][(j, k)] - b.m[a][(i, k)] * b.q[a][(j, l)];
                        if let Some(jac) = jac.as_mut() {
                            jac[(row, idx(a, i, l))] += b.q[a][(j, k)];
                            jac[(row, idx(a, i, k))] -= b.q[a][(j, l)];
                        }
                    }
                    r[row] = v;
                    row += 1;
                }
            }
        }
    }
    debug_assert_eq!(row, rows);
    (r, jac)
}

/// Moves `M` onto the constraint set by minimum-norm Gauss–Newton steps.
///
/// Along directions where only the quadratic pattern acts the iteration
/// converges linearly and the residual is the square of the distance, so it
/// stops on the step size, not on the residual.
fn project(b: &mut Blocks, iters: usize) {
    let p = b.p.len();
    let (d1, d2) = (b.p[0].nrows(), b.q[0].nrows());
    for _ in 0..iters {
        let (r, jac) = constraints(b, true);
        if r.len() == 0 || r.amax() == 0.0 {
            return;
        }
        let jac = jac.expect("requested");
        let step = linalg::lstsq(&jac, &(-r), 1e-13);
        for a in 0..p {
            for i in 0..d1 {
                for l in 0..d2 {
                    b.m[a][(i, l)] += step[a * d1 * d2 + i * d2 + l];
                }
            }
        }
        if step.amax() <= 1e-16 {
            return;
        }
    }
}

/// Generates the instance of one trial.
pub fn generate(n: usize, p: usize, family: Family, rng: &mut ChaCha8Rng, iters: usize) -> Instance {
    let d1 = rng.random_range(1..n);
    let d2 = n - d1;
    let split = OrthogonalSplitting::coordinate(&[d1, d2]);
    let form = match family {
        Family::PerturbedAdapted => {
            let mut b = Blocks {
                p: (0..p).map(|_| linalg::gaussian_symmetric(d1, rng)).collect(),
                q: (0..p).map(|_| linalg::gaussian_symmetric(d2, rng)).collect(),
                m: (0..p).map(|_| linalg::gaussian_matrix(d1, d2, rng) * 0.1).collect(),
            };
            project(&mut b, iters);
            b.assemble()
        }
        Family::RandomProjected => {
            let mut b = Blocks {
                p: (0..p).map(|_| { let r = rng.random_range(0..=d1); low_rank_symmetric(d1, r, rng) }).collect(),
                q: (0..p).map(|_| { let r = rng.random_range(0..=d2); low_rank_symmetric(d2, r, rng) }).collect(),
                m: (0..p).map(|_| linalg::gaussian_matrix(d1, d2, rng)).collect(),
            };
            project(&mut b, iters);
            b.assemble()
        }
        Family::FlatMixed => {
            let extra = rng.random_range(1..=p);
            let mut ops = Vec::with_capacity(p);
            for _ in 0..(p - extra) {
                let mut op = DMatrix::zeros(n, n);
                op.view_mut((0, 0), (d1, d1)).copy_from(&linalg::gaussian_symmetric(d1, rng));
                op.view_mut((d1, d1), (d2, d2)).copy_from(&linalg::gaussian_symmetric(d2, rng));
                ops.push(op);
            }
            for _ in 0..extra {
                let phi = linalg::gaussian_vector(n, rng);
                ops.push(&phi * phi.transpose());
            }
            let form = SymmetricBilinearForm::new(ops, 0.0).expect("symmetric");
            form.rotate_values(&linalg::random_orthogonal(p, rng))
        }
    };
    Instance { family, form, split }
}

fn run_trial(n: usize, p: usize, index: usize, seed: u64, config: &FalsifyConfig) -> TrialOutcome {
    let family = config.families[index % config.families.len()];
    let mut rng = ChaCha8Rng::seed_from_u64(linalg::derive_seed(seed, index as u64, 0xfa15));
    let inst = generate(n, p, family, &mut rng, config.projection_iters);
    let split = (inst.split.dims()[0], inst.split.dims()[1]);
    let curvature = curvature_conditions(&inst.form, &inst.split).expect("two blocks").max();
    let s_norm = linalg::spectral_norm(&mixed_matrix(&inst.form, &inst.split).expect("two blocks"));
    let mut outcome = TrialOutcome {
        index,
        family,
        split,
        curvature,
        s_norm,
        nullities: None,
        status: TrialStatus::OffConstraint,
        step_one: None,
        step_two: None,
    };
    if curvature > config.curvature_tol {
        return outcome;
    }
    outcome.status = TrialStatus::GateRejected;
    if 2 * p >= n {
        return outcome;
    }
    let gate = NullityConfig { seed: linalg::derive_seed(seed, index as u64, 1), ..config.gate.clone() };
    let mut report = hypothesis_gate(&inst.form, &gate).expect("valid gate config");
    if report.ok && s_norm > config.s_tol {
        let recheck = NullityConfig { seed: linalg::derive_seed(seed, index as u64, 2), ..config.recheck.clone() };
        report = hypothesis_gate(&inst.form, &recheck).expect("valid recheck config");
    }
    outcome.nullities = Some(report.values.clone());
    if !report.ok {
        return outcome;
    }
    let (x, _) = max_rank_direction(&inst.form, &inst.split, config.direction_trials.max(1), linalg::derive_seed(seed, index as u64, 3), gate.rank_tol)
        .expect("two blocks");
    let steps = proof_steps_unchecked(&inst.form, &inst.split, &x, gate.rank_tol);
    outcome.step_one = Some(steps.step_one);
    outcome.step_two = Some(steps.step_two);
    outcome.status = if s_norm > config.s_tol { TrialStatus::Violation } else { TrialStatus::Tested };
    outcome
}

/// Runs `trials` seeded trials at dimensions `(n, p)`. Trials are independent
/// and seeded by index, so the report does not depend on the thread count.
pub fn falsify(n: usize, p: usize, trials: usize, seed: u64, config: &FalsifyConfig) -> FalsifyReport {
    assert!(n >= 2 && p >= 1, "falsify needs n >= 2 and p >= 1");
    let families = if config.families.is_empty() { Family::ALL.to_vec() } else { config.families.clone() };
    let config = FalsifyConfig { families: families.clone(), ..config.clone() };
    let outcomes: Vec<TrialOutcome> = (0..trials).into_par_iter().map(|i| run_trial(n, p, i, seed, &config)).collect();
    summarize(n, p, trials, seed, &families, &outcomes, config.s_tol)
}

/// Per-trial outcomes, in index order.
pub fn falsify_trials(n: usize, p: usize, trials: usize, seed: u64, config: &FalsifyConfig) -> Vec<TrialOutcome> {
    let families = if config.families.is_empty() { Family::ALL.to_vec() } else { config.families.clone() };
    let config = FalsifyConfig { families, ..config.clone() };
    (0..trials).into_par_iter().map(|i| run_trial(n, p, i, seed, &config)).collect()
}

fn summarize(n: usize, p: usize, trials: usize, seed: u64, families: &[Family], outcomes: &[TrialOutcome], s_tol: f64) -> FalsifyReport {
    let mut stats: Vec<(Family, FamilyStats)> = Vec::new();
    for f in families {
        if !stats.iter().any(|(g, _)| g == f) {
            stats.push((*f, FamilyStats::default()));
        }
    }
    let mut violating_trials = Vec::new();
    for o in outcomes {
        let st = &mut stats.iter_mut().find(|(f, _)| *f == o.family).expect("known family").1;
        st.generated += 1;
        match o.status {
            TrialStatus::OffConstraint => st.off_constraint += 1,
            TrialStatus::GateRejected => {
                st.gate_rejected += 1;
                if o.s_norm > s_tol {
                    st.gate_rejected_mixed += 1;
                }
            }
            TrialStatus::Tested | TrialStatus::Violation => {
                st.tested += 1;
                if o.status == TrialStatus::Violation {
                    st.violations += 1;
                    violating_trials.push(o.index);
                }
                st.max_s_norm = st.max_s_norm.max(o.s_norm);
                st.max_curvature = st.max_curvature.max(o.curvature);
                st.max_step_one = st.max_step_one.max(o.step_one.unwrap_or(0.0));
                st.max_step_two = st.max_step_two.max(o.step_two.unwrap_or(0.0));
                if let Some(values) = &o.nullities {
                    let m = (1..=p).map(|s| n as i64 - 2 * s as i64 - values[s - 1] as i64).min().unwrap_or(i64::MAX);
                    st.min_margin = Some(st.min_margin.map_or(m, |x| x.min(m)));
                    if m == 1 {
                        st.at_boundary += 1;
                    }
                }
            }
        }
    }
    let tested = stats.iter().map(|(_, s)| s.tested).sum();
    let violations = stats.iter().map(|(_, s)| s.violations).sum();
    FalsifyReport { n, p, trials, seed, families: stats, tested, violations, violating_trials }
}
