//! Orthogonal splittings `V = V₁ ⊕ V₂` of the domain of a form and the
//! splitting lemma: if `2p < n`, `ν_s < n − 2s` for all `s`, and the Gauss
//! tensor vanishes on the patterns
//!
//! ```text
//! R(x, y, z, u) = R(x, y, u, v) = R(x, u, v, w) = 0,   x, y, z ∈ V₁,  u, v, w ∈ V₂,
//! ```
//!
//! then `S = span{β(x, u) : x ∈ V₁, u ∈ V₂}` is zero. The module evaluates
//! each ingredient numerically, replays the constructive steps of the proof,
//! finds the finest adapted splitting of a form ([`adapted`]) and searches for
//! counterexamples at random ([`falsify`]).

pub mod adapted;
pub mod falsify;

use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::forms::{nullity_profile, FormError, NullityConfig, NullityReport, SymmetricBilinearForm};
use crate::linalg;

pub use adapted::{detect_adapted_splitting, detect_adapted_splitting_seeded};
pub use falsify::{falsify, FalsifyConfig, FalsifyReport, Family, FamilyStats};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SplitError {
    #[error("expected {expected} blocks, got {got}")]
    WrongBlockCount { expected: usize, got: usize },
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("splitting blocks are not orthonormal: defect {defect:e}")]
    NotOrthonormal { defect: f64 },
    #[error("number of trial directions is zero")]
    TrialsZero,
    #[error("lemma hypothesis failed: {reason}")]
    HypothesisFailed { reason: String },
    #[error(transparent)]
    Form(#[from] FormError),
}

/// Ordered orthogonal decomposition `V = V₀ ⊕ … ⊕ V_k`, each block given by
/// an orthonormal column frame.
#[derive(Debug, Clone, PartialEq)]
pub struct OrthogonalSplitting {
    n: usize,
    blocks: Vec<DMatrix<f64>>,
}

impl OrthogonalSplitting {
    /// Validates that the blocks together form an orthonormal basis of `Rⁿ`.
    pub fn new(n: usize, blocks: Vec<DMatrix<f64>>, tol: f64) -> Result<Self, SplitError> {
        let total: usize = blocks.iter().map(|b| b.ncols()).sum();
        if total != n {
            return Err(SplitError::DimensionMismatch { expected: n, got: total });
        }
        for b in &blocks {
            if b.nrows() != n {
                return Err(SplitError::DimensionMismatch { expected: n, got: b.nrows() });
            }
        }
        let refs: Vec<&DMatrix<f64>> = blocks.iter().collect();
        let defect = linalg::orthonormality_defect(&linalg::hcat(&refs, n));
        if defect > tol {
            return Err(SplitError::NotOrthonormal { defect });
        }
        Ok(Self { n, blocks })
    }

    /// Splitting of `Rⁿ` into consecutive coordinate blocks of the given sizes.
    pub fn coordinate(dims: &[usize]) -> Self {
        let n = dims.iter().sum();
        let mut at = 0;
        let blocks = dims
            .iter()
            .map(|&d| {
                let b = DMatrix::from_fn(n, d, |i, j| if i == at + j { 1.0 } else { 0.0 });
                at += d;
                b
            })
            .collect();
        Self { n, blocks }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn blocks(&self) -> &[DMatrix<f64>] {
        &self.blocks
    }

    pub fn block(&self, i: usize) -> &DMatrix<f64> {
        &self.blocks[i]
    }

    pub fn dims(&self) -> Vec<usize> {
        self.blocks.iter().map(|b| b.ncols()).collect()
    }

    /// All block frames side by side.
    pub fn basis(&self) -> DMatrix<f64> {
        let refs: Vec<&DMatrix<f64>> = self.blocks.iter().collect();
        linalg::hcat(&refs, self.n)
    }

    /// Orthogonal projector onto block `i`.
    pub fn projector(&self, i: usize) -> DMatrix<f64> {
        &self.blocks[i] * self.blocks[i].transpose()
    }

    /// The two-block splitting `(V_i, ⊕_{j≠i} V_j)`.
    pub fn grouped(&self, i: usize) -> Self {
        let rest: Vec<&DMatrix<f64>> = self.blocks.iter().enumerate().filter(|(j, _)| *j != i).map(|(_, b)| b).collect();
        Self { n: self.n, blocks: vec![self.blocks[i].clone(), linalg::hcat(&rest, self.n)] }
    }

    /// Image of the splitting under an orthogonal map `q`.
    pub fn transformed(&self, q: &DMatrix<f64>) -> Self {
        Self { n: self.n, blocks: self.blocks.iter().map(|b| q * b).collect() }
    }

    fn require_two(&self) -> Result<(), SplitError> {
        if self.blocks.len() != 2 {
            return Err(SplitError::WrongBlockCount { expected: 2, got: self.blocks.len() });
        }
        Ok(())
    }

    fn check_form(&self, form: &SymmetricBilinearForm) -> Result<(), SplitError> {
        if form.n() != self.n {
            return Err(SplitError::DimensionMismatch { expected: self.n, got: form.n() });
        }
        Ok(())
    }
}

/// The `p × (d₁ d₂)` matrix whose column `(i, j)` is `β(eᵢ, f_j)` for the
/// block frames `eᵢ ∈ V₁`, `f_j ∈ V₂`.
pub fn mixed_matrix(form: &SymmetricBilinearForm, split: &OrthogonalSplitting) -> Result<DMatrix<f64>, SplitError> {
    split.require_two()?;
    split.check_form(form)?;
    let (v1, v2) = (split.block(0), split.block(1));
    let (d1, d2) = (v1.ncols(), v2.ncols());
    let mut out = DMatrix::zeros(form.p(), d1 * d2);
    for (a, op) in form.ops().iter().enumerate() {
        let block = v1.transpose() * op * v2;
        for i in 0..d1 {
            for j in 0..d2 {
                out[(a, i * d2 + j)] = block[(i, j)];
            }
        }
    }
    Ok(out)
}

/// `dim S` and an orthonormal basis of `S` (columns, in `W`).
pub fn mixed_span(
    form: &SymmetricBilinearForm,
    split: &OrthogonalSplitting,
    rank_tol: f64,
) -> Result<(usize, DMatrix<f64>), SplitError> {
    let m = mixed_matrix(form, split)?;
    let basis = linalg::range_basis(&m, rank_tol * form.scale());
    Ok((basis.ncols(), basis))
}

/// Largest `|R|` on each of the three vanishing patterns.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct CurvatureResidual {
    /// `R(x, y, z, u)`: three slots in `V₁`, one in `V₂`.
    pub three_one: f64,
    /// `R(x, y, u, v)`.
    pub two_two: f64,
    /// `R(x, u, v, w)`.
    pub one_three: f64,
}

impl CurvatureResidual {
    pub fn max(&self) -> f64 {
        self.three_one.max(self.two_two).max(self.one_three)
    }
}

/// Evaluates the Gauss tensor on every basis tuple of the three patterns.
pub fn curvature_conditions(form: &SymmetricBilinearForm, split: &OrthogonalSplitting) -> Result<CurvatureResidual, SplitError> {
    split.require_two()?;
    split.check_form(form)?;
    let d1 = split.block(0).ncols();
    let n = split.n();
    let t = form.pair_table(&split.basis());
    let r = |a: usize, b: usize, c: usize, d: usize| t[a][d].dot(&t[b][c]) - t[a][c].dot(&t[b][d]);
    let (first, second) = (0..d1, d1..n);
    let mut out = CurvatureResidual::default();
    for x in first.clone() {
        for y in first.clone() {
            for z in first.clone() {
                for u in second.clone() {
                    out.three_one = out.three_one.max(r(x, y, z, u).abs());
                }
            }
            for u in second.clone() {
                for v in second.clone() {
                    out.two_two = out.two_two.max(r(x, y, u, v).abs());
                }
            }
        }
        for u in second.clone() {
            for v in second.clone() {
                for w in second.clone() {
                    out.one_three = out.one_three.max(r(x, u, v, w).abs());
                }
            }
        }
    }
    Ok(out)
}

/// Matrix of `B_x: V₂ → W`, `B_x y = β(x, y)`, in the frame of `V₂`.
pub fn b_map(form: &SymmetricBilinearForm, split: &OrthogonalSplitting, x: &DVector<f64>) -> DMatrix<f64> {
    let v2 = split.block(1);
    let xt = x.transpose();
    let mut out = DMatrix::zeros(form.p(), v2.ncols());
    for (a, op) in form.ops().iter().enumerate() {
        out.row_mut(a).copy_from(&(&xt * op * v2));
    }
    out
}

/// Picks `x ∈ V₁` maximizing `rank B_x` among seeded random unit vectors and
/// the basis vectors of `V₁` (first maximizer wins). Returns `x` in
/// coordinates of `V` and the rank.
pub fn max_rank_direction(
    form: &SymmetricBilinearForm,
    split: &OrthogonalSplitting,
    trials: usize,
    seed: u64,
    rank_tol: f64,
) -> Result<(DVector<f64>, usize), SplitError> {
    split.require_two()?;
    split.check_form(form)?;
    if trials == 0 {
        return Err(SplitError::TrialsZero);
    }
    let v1 = split.block(0);
    let d1 = v1.ncols();
    let threshold = rank_tol * form.scale();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut candidates: Vec<DVector<f64>> = (0..trials).map(|_| v1 * linalg::random_unit(d1, &mut rng)).collect();
    candidates.extend((0..d1).map(|i| v1.column(i).into_owned()));
    let mut best: Option<(DVector<f64>, usize)> = None;
    for x in candidates {
        let r = linalg::rank(&b_map(form, split, &x), threshold);
        if best.as_ref().is_none_or(|(_, b)| r > *b) {
            best = Some((x, r));
        }
    }
    Ok(best.expect("V₁ is nonempty or trials > 0"))
}

/// Residuals of the constructive steps of the proof for a chosen `x ∈ V₁`.
#[derive(Debug, Clone, PartialEq)]
pub struct ProofSteps {
    /// Orthonormal basis of `D = ker B_x ⊂ V₂` (coordinates of `V`).
    pub kernel_d: DMatrix<f64>,
    /// `max_y ‖B_y|_D‖` over basis vectors `y` of `V₁`.
    pub step_one: f64,
    /// `max |⟨B_x e_j, B_y v⟩|` for `e_j ∈ E = D^⊥ ∩ V₂`, `v ∈ D`, `y` basis of `V₁`.
    pub step_zero: f64,
    /// `max ‖π_S(β(u, v) − Σ ⟨u, eᵢ⟩⟨v, e_j⟩ β(eᵢ, e_j))‖` over basis pairs of `V₂`.
    pub step_two: f64,
}

/// Lemma thresholds and budgets.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", default)]
pub struct LemmaConfig {
    pub nullity: NullityConfig,
    /// Largest `|R|` on the vanishing patterns that counts as zero.
    pub curvature_tol: f64,
    /// Largest `‖S‖` that counts as `S = 0`.
    pub s_tol: f64,
    /// Random directions tried by [`max_rank_direction`].
    pub direction_trials: usize,
    pub seed: u64,
}

impl Default for LemmaConfig {
    fn default() -> Self {
        Self { nullity: NullityConfig::default(), curvature_tol: 1e-8, s_tol: 1e-6, direction_trials: 16, seed: 0 }
    }
}

fn proof_steps_unchecked(
    form: &SymmetricBilinearForm,
    split: &OrthogonalSplitting,
    x: &DVector<f64>,
    rank_tol: f64,
) -> ProofSteps {
    let threshold = rank_tol * form.scale();
    let v1 = split.block(0);
    let v2 = split.block(1);
    let bx = b_map(form, split, x);
    let (values, right) = linalg::right_singular_basis(&bx);
    let r = values.iter().filter(|&&s| s > threshold).count();
    let d2 = v2.ncols();
    // coordinates inside V₂
    let d_local = right.columns(r, d2 - r).into_owned();
    let e_local = right.columns(0, r).into_owned();
    let kernel_d = v2 * &d_local;

    let mut step_one: f64 = 0.0;
    let mut step_zero: f64 = 0.0;
    for i in 0..v1.ncols() {
        let by = b_map(form, split, &v1.column(i).into_owned());
        let on_d = &by * &d_local;
        step_one = step_one.max(linalg::spectral_norm(&on_d));
        let pairing = (&bx * &e_local).transpose() * &on_d;
        if pairing.len() > 0 {
            step_zero = step_zero.max(pairing.amax());
        }
    }

    let (_, s_basis) = mixed_span(form, split, rank_tol).expect("two blocks");
    let mut step_two: f64 = 0.0;
    if s_basis.ncols() > 0 {
        let e_frame = v2 * &e_local;
        let table_v2 = form.pair_table(v2);
        let table_e = form.pair_table(&e_frame);
        // ⟨u, eᵢ⟩ for u the j-th basis vector of V₂ is e_local[(j, i)]
        for u in 0..d2 {
            for v in 0..d2 {
                let mut diff = table_v2[u][v].clone();
                for i in 0..r {
                    for j in 0..r {
                        diff -= &table_e[i][j] * (e_local[(u, i)] * e_local[(v, j)]);
                    }
                }
                step_two = step_two.max((s_basis.transpose() * diff).norm());
            }
        }
    }
    ProofSteps { kernel_d, step_one, step_zero, step_two }
}

/// Replays the proof steps at `x`, refusing when the hypotheses fail.
pub fn verify_proof_steps(
    form: &SymmetricBilinearForm,
    split: &OrthogonalSplitting,
    x: &DVector<f64>,
    config: &LemmaConfig,
) -> Result<ProofSteps, SplitError> {
    split.require_two()?;
    split.check_form(form)?;
    if x.len() != form.n() {
        return Err(SplitError::DimensionMismatch { expected: form.n(), got: x.len() });
    }
    let report = nullity_profile(form, &config.nullity)?;
    if !report.hypothesis_ok {
        return Err(SplitError::HypothesisFailed { reason: hypothesis_reason(&report) });
    }
    let curvature = curvature_conditions(form, split)?.max();
    if curvature > config.curvature_tol {
        return Err(SplitError::HypothesisFailed {
            reason: format!("curvature residual {curvature:e} exceeds {:e}", config.curvature_tol),
        });
    }
    Ok(proof_steps_unchecked(form, split, x, config.nullity.rank_tol))
}

fn hypothesis_reason(report: &NullityReport) -> String {
    if 2 * report.p >= report.n {
        return format!("2p = {} is not below n = {}", 2 * report.p, report.n);
    }
    match report.first_violation() {
        Some(s) => format!("nu_{s} = {} is not below n - 2s = {}", report.nu(s), report.n as i64 - 2 * s as i64),
        None => "nullity bound holds".to_string(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub enum Verdict {
    /// Hypotheses hold and `S = 0`.
    Holds,
    /// The nullity bound or the curvature conditions fail.
    HypothesisFails,
    /// Hypotheses hold but `S ≠ 0`: a counterexample.
    Violated,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LemmaReport {
    pub nullity: NullityReport,
    pub curvature: CurvatureResidual,
    pub hypothesis_ok: bool,
    pub s_dim: usize,
    /// Spectral norm of the mixed matrix.
    pub s_norm: f64,
    pub max_rank_direction: DVector<f64>,
    pub max_rank: usize,
    /// Proof-step residuals, only when the hypotheses hold.
    pub steps: Option<ProofSteps>,
    pub verdict: Verdict,
    /// Human-readable reason when the verdict is not `Holds`.
    pub reason: Option<String>,
}

impl LemmaReport {
    pub fn curvature_residual(&self) -> f64 {
        self.curvature.max()
    }
}

/// Full pipeline: nullities, curvature conditions, mixed span, proof steps.
pub fn lemma_verify(
    form: &SymmetricBilinearForm,
    split: &OrthogonalSplitting,
    config: &LemmaConfig,
) -> Result<LemmaReport, SplitError> {
    split.require_two()?;
    split.check_form(form)?;
    let nullity = nullity_profile(form, &config.nullity)?;
    let curvature = curvature_conditions(form, split)?;
    let mixed = mixed_matrix(form, split)?;
    let s_norm = linalg::spectral_norm(&mixed);
    let s_dim = linalg::rank(&mixed, config.nullity.rank_tol * form.scale());
    let (x, max_rank) = max_rank_direction(form, split, config.direction_trials.max(1), config.seed, config.nullity.rank_tol)?;
    let curvature_ok = curvature.max() <= config.curvature_tol;
    let hypothesis_ok = nullity.hypothesis_ok && curvature_ok;
    let (verdict, reason, steps) = if !nullity.hypothesis_ok {
        (Verdict::HypothesisFails, Some(hypothesis_reason(&nullity)), None)
    } else if !curvature_ok {
        let reason = format!("curvature residual {:e} exceeds {:e}", curvature.max(), config.curvature_tol);
        (Verdict::HypothesisFails, Some(reason), None)
    } else {
        let steps = proof_steps_unchecked(form, split, &x, config.nullity.rank_tol);
        if s_norm <= config.s_tol {
            (Verdict::Holds, None, Some(steps))
        } else {
            (Verdict::Violated, Some(format!("mixed span norm {s_norm:e} exceeds {:e}", config.s_tol)), Some(steps))
        }
    };
    Ok(LemmaReport { nullity, curvature, hypothesis_ok, s_dim, s_norm, max_rank_direction: x, max_rank, steps, verdict, reason })
}

/// Checks a `k`-block splitting by grouping each block against the rest.
pub fn lemma_verify_blocks(
    form: &SymmetricBilinearForm,
    split: &OrthogonalSplitting,
    config: &LemmaConfig,
) -> Result<Vec<LemmaReport>, SplitError> {
    split.check_form(form)?;
    (0..split.blocks().len()).map(|i| lemma_verify(form, &split.grouped(i), config)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;

    fn block_diag(p: &DMatrix<f64>, q: &DMatrix<f64>) -> DMatrix<f64> {
        let (a, b) = (p.nrows(), q.nrows());
        let mut m = DMatrix::zeros(a + b, a + b);
        m.view_mut((0, 0), (a, a)).copy_from(p);
        m.view_mut((a, a), (b, b)).copy_from(q);
        m
    }

    fn adapted(n1: usize, n2: usize, p: usize, seed: u64) -> SymmetricBilinearForm {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let ops = (0..p)
            .map(|_| block_diag(&linalg::gaussian_symmetric(n1, &mut rng), &linalg::gaussian_symmetric(n2, &mut rng)))
            .collect();
        SymmetricBilinearForm::new(ops, 0.0).unwrap()
    }

    fn swap_form(n: usize) -> SymmetricBilinearForm {
        let mut a = DMatrix::zeros(n, n);
        a[(0, 1)] = 1.0;
        a[(1, 0)] = 1.0;
        SymmetricBilinearForm::new(vec![a], 0.0).unwrap()
    }

    #[test]
    fn adapted_form_has_zero_mixed_span() {
        let f = adapted(3, 4, 2, 1);
        let split = OrthogonalSplitting::coordinate(&[3, 4]);
        assert_eq!(mixed_span(&f, &split, 1e-9).unwrap().0, 0);
        assert!(curvature_conditions(&f, &split).unwrap().max() < 1e-12);
    }

    #[test]
    fn single_mixed_entry_spans_a_line() {
        let f = swap_form(4);
        let split = OrthogonalSplitting::coordinate(&[1, 3]);
        assert_eq!(mixed_span(&f, &split, 1e-9).unwrap().0, 1);
    }

    #[test]
    fn mixed_span_rank_matches_gram_determinants() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let ops = (0..3).map(|_| linalg::gaussian_symmetric(5, &mut rng)).collect();
        let f = SymmetricBilinearForm::new(ops, 0.0).unwrap();
        let split = OrthogonalSplitting::coordinate(&[2, 3]);
        let m = mixed_matrix(&f, &split).unwrap();
        // largest k with a nonzero k×k Gram minor of the rows
        let g = &m * m.transpose();
        let mut oracle = 0;
        for k in 1..=3 {
            if g.view((0, 0), (k, k)).into_owned().determinant().abs() > 1e-8 {
                oracle = k;
            }
        }
        assert_eq!(mixed_span(&f, &split, 1e-9).unwrap().0, oracle);
    }

    #[test]
    fn rank_one_and_umbilic_forms_satisfy_curvature_conditions() {
        // β(x, y) = φ(x)φ(y): both products in R are φ(x)φ(y)φ(z)φ(w)
        let ones = DMatrix::from_element(4, 4, 1.0);
        let split = OrthogonalSplitting::coordinate(&[2, 2]);
        let f = SymmetricBilinearForm::new(vec![ones.clone()], 0.0).unwrap();
        assert!(curvature_conditions(&f, &split).unwrap().max() < 1e-14);
        // the umbilic component only pairs vectors of the same block
        let g = SymmetricBilinearForm::new(vec![ones, DMatrix::identity(4, 4)], 0.0).unwrap();
        assert!(curvature_conditions(&g, &split).unwrap().max() < 1e-14);
    }

    #[test]
    fn generic_form_violates_curvature_conditions() {
        let a = DMatrix::from_row_slice(4, 4, &[1., 1., 1., 0., 1., 2., 0., 1., 1., 0., 0., 0., 0., 1., 0., 3.]);
        let f = SymmetricBilinearForm::new(vec![a], 0.0).unwrap();
        let split = OrthogonalSplitting::coordinate(&[2, 2]);
        // hand value: R(e₀, e₁, e₁, e₂) = A₀₂A₁₁ − A₀₁A₁₂ = 1·2 − 1·0 = 2
        let r = f.gauss_tensor(&e(4, 0), &e(4, 1), &e(4, 1), &e(4, 2)).unwrap();
        assert_eq!(r, 2.0);
        assert!(curvature_conditions(&f, &split).unwrap().three_one >= 2.0);
    }

    fn e(n: usize, i: usize) -> DVector<f64> {
        let mut v = DVector::zeros(n);
        v[i] = 1.0;
        v
    }

    #[test]
    fn adapted_form_has_zero_direction_rank() {
        let f = adapted(3, 4, 2, 2);
        let split = OrthogonalSplitting::coordinate(&[3, 4]);
        assert_eq!(max_rank_direction(&f, &split, 8, 0, 1e-9).unwrap().1, 0);
    }

    #[test]
    fn swap_form_direction_rank_is_one() {
        let f = swap_form(4);
        let split = OrthogonalSplitting::coordinate(&[2, 2]);
        // B_x has image span(β(e₀, e₁))... only when V₂ contains e₁; here V₂ = span(e₂, e₃)
        assert_eq!(max_rank_direction(&f, &split, 8, 0, 1e-9).unwrap().1, 0);
        let split = OrthogonalSplitting::new(4, vec![
            DMatrix::from_column_slice(4, 2, &[1., 0., 0., 0., 0., 0., 1., 0.]),
            DMatrix::from_column_slice(4, 2, &[0., 1., 0., 0., 0., 0., 0., 1.]),
        ], 1e-12).unwrap();
        let (x, r) = max_rank_direction(&f, &split, 8, 0, 1e-9).unwrap();
        assert_eq!(r, 1);
        assert!(x[0].abs() > 1e-6);
    }

    #[test]
    fn sampled_direction_rank_matches_grid() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let ops = (0..2).map(|_| linalg::gaussian_symmetric(4, &mut rng)).collect();
        let f = SymmetricBilinearForm::new(ops, 0.0).unwrap();
        let split = OrthogonalSplitting::coordinate(&[2, 2]);
        let (_, sampled) = max_rank_direction(&f, &split, 16, 3, 1e-9).unwrap();
        let mut grid = 0;
        for i in 0..360 {
            let t = i as f64 * std::f64::consts::PI / 360.0;
            let x = DVector::from_vec(vec![t.cos(), t.sin(), 0.0, 0.0]);
            grid = grid.max(linalg::rank(&b_map(&f, &split, &x), 1e-9 * f.scale()));
        }
        assert_eq!(sampled, grid);
    }

    #[test]
    fn adapted_form_holds_with_trivial_steps() {
        let f = adapted(3, 4, 2, 5);
        let split = OrthogonalSplitting::coordinate(&[3, 4]);
        let report = lemma_verify(&f, &split, &LemmaConfig::default()).unwrap();
        assert_eq!(report.verdict, Verdict::Holds);
        assert_eq!(report.s_norm, 0.0);
        let steps = report.steps.unwrap();
        assert_eq!(steps.kernel_d.ncols(), 4);
        assert_eq!(steps.step_one, 0.0);
        assert_eq!(steps.step_two, 0.0);
    }

    #[test]
    fn large_nullity_fails_the_gate() {
        let f = swap_form(5);
        let split = OrthogonalSplitting::coordinate(&[1, 4]);
        let report = lemma_verify(&f, &split, &LemmaConfig::default()).unwrap();
        assert_eq!(report.verdict, Verdict::HypothesisFails);
        let x = e(5, 0);
        assert!(matches!(
            verify_proof_steps(&f, &split, &x, &LemmaConfig::default()),
            Err(SplitError::HypothesisFailed { .. })
        ));
    }

    #[test]
    fn wrong_block_count_is_rejected() {
        let f = swap_form(3);
        let split = OrthogonalSplitting::coordinate(&[1, 1, 1]);
        assert!(matches!(mixed_span(&f, &split, 1e-9), Err(SplitError::WrongBlockCount { .. })));
        assert_eq!(lemma_verify_blocks(&f, &split, &LemmaConfig::default()).unwrap().len(), 3);
    }

    #[test]
    fn non_orthogonal_blocks_are_rejected() {
        let b = DMatrix::from_column_slice(2, 1, &[1.0, 0.0]);
        let c = DMatrix::from_column_slice(2, 1, &[1.0, 1.0]);
        assert!(matches!(OrthogonalSplitting::new(2, vec![b, c], 1e-12), Err(SplitError::NotOrthonormal { .. })));
    }
}
