//! s-nullities of a symmetric bilinear form.
//!
//! For an `s`-dimensional subspace `U ⊂ W` the nullity at `U` is the
//! dimension of `{x : π_U β(x, y) = 0 ∀y}`, i.e. of the common kernel of the
//! shape operators `A_u` for `u` in a basis of `U`. The s-nullity `ν_s` is its
//! maximum over the Grassmannian `Gr(s, p)`.
//!
//! The objective is integer valued and jumps up only on thin subsets of the
//! Grassmannian, so sampling frames at random essentially never finds the
//! maximum. The search here instead drives, for each target kernel dimension
//! `k`, the `k` smallest singular values of the stacked operators to zero:
//! alternating eigen-steps on `(U, K)` for `Σⱼ ‖A_{uⱼ} K‖²`, then a
//! Gauss–Newton polish of the bilinear system `A_{uⱼ} K = 0`. Every reported
//! value is achieved by its witness frame, so search results are lower
//! bounds. For `p ≤ 3` the deterministic sweep in [`super::grid`] is added
//! and the result is flagged as certified.

use nalgebra::DMatrix;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{grid, FormError, SymmetricBilinearForm};
use crate::linalg;

/// How `ν_s` is computed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub enum NullityMode {
    /// `ExactSmall` when `p ≤ 3`, `Search` otherwise.
    Auto,
    /// Deterministic Grassmannian sweep plus search; requires `p ≤ 3`.
    ExactSmall,
    /// Multistart search; reports a lower bound.
    Search,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", default)]
pub struct NullityConfig {
    /// Singular values below `rank_tol · ‖β‖_F` count as zero.
    pub rank_tol: f64,
    pub mode: NullityMode,
    /// Grid points per angular parameter for `p = 2`.
    pub grid_res: usize,
    /// Grid points per angular parameter for `p = 3`.
    pub grid_res_2d: usize,
    /// Number of random starts of the search.
    pub starts: usize,
    pub seed: u64,
}

impl Default for NullityConfig {
    fn default() -> Self {
        Self {
            rank_tol: 1e-9,
            mode: NullityMode::Auto,
            grid_res: 720,
            grid_res_2d: 72,
            starts: 24,
            seed: 0,
        }
    }
}

/// Result of one s-nullity computation.
#[derive(Debug, Clone, PartialEq)]
pub struct SNullity {
    pub s: usize,
    pub value: usize,
    /// Orthonormal `p × s` frame achieving `value`.
    pub witness: DMatrix<f64>,
    /// `true` when the value is exact (common kernel, `p ≤ 3` sweep, or `value = n`).
    pub certified: bool,
}

/// All s-nullities of a form together with the splitting-lemma hypothesis.
#[derive(Debug, Clone, PartialEq)]
pub struct NullityReport {
    pub n: usize,
    pub p: usize,
    /// `values[s - 1] = ν_s`.
    pub values: Vec<usize>,
    pub witnesses: Vec<DMatrix<f64>>,
    pub certified: Vec<bool>,
    /// `2p < n` and `ν_s < n − 2s` for every `s`.
    pub hypothesis_ok: bool,
}

impl NullityReport {
    pub fn nu(&self, s: usize) -> usize {
        self.values[s - 1]
    }

    /// `(n − 2s) − ν_s`; positive exactly when the bound holds at `s`.
    pub fn margin(&self, s: usize) -> i64 {
        self.n as i64 - 2 * s as i64 - self.nu(s) as i64
    }

    /// Smallest `s` with `ν_s ≥ n − 2s`, if any.
    pub fn first_violation(&self) -> Option<usize> {
        (1..=self.p).find(|&s| self.margin(s) <= 0)
    }
}

pub(crate) fn zero_threshold(form: &SymmetricBilinearForm, rank_tol: f64) -> f64 {
    rank_tol * form.scale()
}

/// Kernel dimension of the stacked operators of `frame`, with an absolute threshold.
pub(crate) fn nullity_raw(form: &SymmetricBilinearForm, frame: &DMatrix<f64>, threshold: f64) -> usize {
    if frame.ncols() == 0 {
        return form.n();
    }
    form.n() - linalg::rank(&form.stacked(frame), threshold)
}

/// Dimension of the common kernel of `{A_u : u ∈ span(frame)}`.
pub fn nullity_at_subspace(
    form: &SymmetricBilinearForm,
    frame: &DMatrix<f64>,
    rank_tol: f64,
) -> Result<usize, FormError> {
    if frame.nrows() != form.p() {
        return Err(FormError::DimensionMismatch { expected: form.p(), got: frame.nrows() });
    }
    let defect = linalg::orthonormality_defect(frame);
    if defect > rank_tol.max(64.0 * f64::EPSILON) {
        return Err(FormError::FrameNotOrthonormal { defect });
    }
    Ok(nullity_raw(form, frame, zero_threshold(form, rank_tol)))
}

/// Relative nullity `ν_p`: dimension of the common kernel of all operators.
pub fn common_kernel_dim(form: &SymmetricBilinearForm, rank_tol: f64) -> usize {
    let id = DMatrix::identity(form.p(), form.p());
    nullity_raw(form, &id, zero_threshold(form, rank_tol))
}

/// `ν_s` of `form`, with a witness frame.
pub fn s_nullity(form: &SymmetricBilinearForm, s: usize, config: &NullityConfig) -> Result<SNullity, FormError> {
    let p = form.p();
    let n = form.n();
    if s == 0 || s > p {
        return Err(FormError::SOutOfRange { s, p });
    }
    let threshold = zero_threshold(form, config.rank_tol);
    if s == p {
        let witness = DMatrix::identity(p, p);
        let value = nullity_raw(form, &witness, threshold);
        return Ok(SNullity { s, value, witness, certified: true });
    }
    let mode = match config.mode {
        NullityMode::Auto if p <= 3 => NullityMode::ExactSmall,
        NullityMode::Auto => NullityMode::Search,
        m => m,
    };
    match mode {
        NullityMode::ExactSmall => {
            if p > 3 {
                return Err(FormError::PTooLarge { p });
            }
            if config.grid_res == 0 || config.grid_res_2d == 0 {
                return Err(FormError::BudgetZero);
            }
            let (mut value, mut witness) =
                grid::sweep_max(form, s, config.grid_res, config.grid_res_2d, config.rank_tol)?;
            if config.starts > 0 && value < n {
                let (v, w) = search(form, s, config.starts, config.seed, threshold, None);
                if v > value {
                    value = v;
                    witness = w;
                }
            }
            Ok(SNullity { s, value, witness, certified: true })
        }
        _ => {
            if config.starts == 0 {
                return Err(FormError::BudgetZero);
            }
            let hint = if s > 1 {
                let prev = s_nullity(form, s - 1, config)?;
                Some((prev.value, prev.witness))
            } else {
                None
            };
            let (value, witness) = search(form, s, config.starts, config.seed, threshold, hint.as_ref());
            Ok(SNullity { s, value, witness, certified: value == n })
        }
    }
}

/// Runs [`s_nullity`] for every `s` and evaluates the nullity hypothesis.
pub fn nullity_profile(form: &SymmetricBilinearForm, config: &NullityConfig) -> Result<NullityReport, FormError> {
    let (n, p) = (form.n(), form.p());
    let mut values = Vec::with_capacity(p);
    let mut witnesses = Vec::with_capacity(p);
    let mut certified = Vec::with_capacity(p);
    for s in 1..=p {
        let r = match (search_mode(config, p), witnesses.last()) {
            (true, Some(prev)) if s < p => {
                if config.starts == 0 {
                    return Err(FormError::BudgetZero);
                }
                let threshold = zero_threshold(form, config.rank_tol);
                let hint = (values[s - 2], DMatrix::clone(prev));
                let (value, witness) = search(form, s, config.starts, config.seed, threshold, Some(&hint));
                SNullity { s, value, witness, certified: value == n }
            }
            _ => s_nullity(form, s, config)?,
        };
        values.push(r.value);
        witnesses.push(r.witness);
        certified.push(r.certified);
    }
    let hypothesis_ok = 2 * p < n && values.iter().enumerate().all(|(i, &v)| (v as i64) < n as i64 - 2 * (i as i64 + 1));
    Ok(NullityReport { n, p, values, witnesses, certified, hypothesis_ok })
}

fn search_mode(config: &NullityConfig, p: usize) -> bool {
    matches!(config.mode, NullityMode::Search) || (matches!(config.mode, NullityMode::Auto) && p > 3)
}

/// Multistart search. Each start owns its seed and climbs by increasing
/// target; the reduction keeps the largest value and, among equal values,
/// the lowest start index. A second pass climbs directly to decreasing
/// targets between the best value and an upper bound (`ν_{s-1}` from `hint`
/// or `n`), starting from extensions of the `(s-1)`-witness and from the
/// first random frames.
pub(crate) fn search(
    form: &SymmetricBilinearForm,
    s: usize,
    starts: usize,
    seed: u64,
    threshold: f64,
    hint: Option<&(usize, DMatrix<f64>)>,
) -> (usize, DMatrix<f64>) {
    search_capped(form, s, starts, seed, threshold, hint, form.n(), false)
}

/// [`search`] that stops once `cap` is reached. With `cap_only` the second
/// pass tries the target `cap` alone.
#[allow(clippy::too_many_arguments)]
fn search_capped(
    form: &SymmetricBilinearForm,
    s: usize,
    starts: usize,
    seed: u64,
    threshold: f64,
    hint: Option<&(usize, DMatrix<f64>)>,
    cap: usize,
    cap_only: bool,
) -> (usize, DMatrix<f64>) {
    let (value, frame, firsts) = ascending(form, s, starts, seed, threshold, cap);
    let upper = hint.map_or(form.n(), |h| h.0).min(cap);
    if value >= upper || (cap_only && upper < cap) {
        return (value, frame);
    }
    let mut frames = Vec::new();
    if let Some((_, w)) = hint {
        let comp = linalg::orthonormal_complement(w, form.p());
        for j in 0..comp.ncols() {
            frames.push(linalg::hcat(&[w, &comp.columns(j, 1).into_owned()], form.p()));
        }
    }
    frames.push(frame.clone());
    frames.extend(firsts);
    let lowest = if cap_only { upper } else { value + 1 };
    for k in (lowest..=upper).rev() {
        for f in &frames {
            let Some(candidate) = climb_screened(form, f, k, threshold, DESCENT_SCREEN) else { continue };
            let v = nullity_raw(form, &candidate, threshold);
            if v >= k {
                return (v, candidate);
            }
        }
    }
    (value, frame)
}

/// Outcome of [`hypothesis_gate`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct GateOutcome {
    pub ok: bool,
    /// Values for `s = 1..` up to the first violation. In search mode these
    /// are lower bounds capped at `n − 2s`.
    pub values: Vec<usize>,
    pub violation: Option<usize>,
}

/// Checks `2p < n` and `ν_s < n − 2s` for `s = 1..p`, stopping at the first
/// violation. Search mode only climbs as far as the bound.
pub fn hypothesis_gate(form: &SymmetricBilinearForm, config: &NullityConfig) -> Result<GateOutcome, FormError> {
    let (n, p) = (form.n(), form.p());
    if 2 * p >= n {
        return Ok(GateOutcome { ok: false, values: Vec::new(), violation: None });
    }
    let threshold = zero_threshold(form, config.rank_tol);
    let searching = search_mode(config, p);
    if searching && config.starts == 0 {
        return Err(FormError::BudgetZero);
    }
    let mut values = Vec::with_capacity(p);
    let mut hint: Option<(usize, DMatrix<f64>)> = None;
    for s in 1..=p {
        let bound = n - 2 * s;
        let (value, witness) = if searching && s < p {
            search_capped(form, s, config.starts, config.seed, threshold, hint.as_ref(), bound, true)
        } else {
            let r = s_nullity(form, s, config)?;
            (r.value, r.witness)
        };
        values.push(value);
        if value >= bound {
            return Ok(GateOutcome { ok: false, values, violation: Some(s) });
        }
        hint = Some((value, witness));
    }
    Ok(GateOutcome { ok: true, values, violation: None })
}

const DESCENT_STARTS: usize = 3;
const DESCENT_SCREEN: f64 = 1e-2;

fn ascending(
    form: &SymmetricBilinearForm,
    s: usize,
    starts: usize,
    seed: u64,
    threshold: f64,
    cap: usize,
) -> (usize, DMatrix<f64>, Vec<DMatrix<f64>>) {
    let (_, p) = (form.n(), form.p());
    let mut best: Option<(usize, DMatrix<f64>)> = None;
    let mut firsts = Vec::new();
    for start in 0..starts {
        let mut rng = ChaCha8Rng::seed_from_u64(linalg::derive_seed(seed, s as u64, start as u64));
        let mut frame = linalg::random_frame(p, s, &mut rng);
        if start < DESCENT_STARTS {
            firsts.push(frame.clone());
        }
        let mut value = nullity_raw(form, &frame, threshold);
        while value < cap {
            let target = value + 1;
            let candidate = climb(form, &frame, target, threshold);
            let v = nullity_raw(form, &candidate, threshold);
            if v >= target {
                frame = candidate;
                value = v;
            } else {
                break;
            }
        }
        if best.as_ref().is_none_or(|(b, _)| value > *b) {
            best = Some((value, frame));
        }
        if value >= cap {
            break;
        }
    }
    let (value, frame) = best.expect("at least one start");
    (value, frame, firsts)
}

/// Eigenvectors of the `count` smallest eigenvalues of a symmetric matrix,
/// and the sum of those eigenvalues.
fn smallest_eigenvectors(m: &DMatrix<f64>, count: usize) -> (DMatrix<f64>, f64) {
    let eig = m.clone().symmetric_eigen();
    let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let mut out = DMatrix::zeros(m.nrows(), count);
    let mut sum = 0.0;
    for (c, &i) in order.iter().take(count).enumerate() {
        out.set_column(c, &eig.eigenvectors.column(i));
        sum += eig.eigenvalues[i];
    }
    (out, sum)
}

fn kernel_guess(form: &SymmetricBilinearForm, frame: &DMatrix<f64>, k: usize) -> DMatrix<f64> {
    let n = form.n();
    let mut m = DMatrix::zeros(n, n);
    for j in 0..frame.ncols() {
        let a = form.shape_operator(&frame.column(j).into_owned());
        m += &a * &a;
    }
    smallest_eigenvectors(&m, k).0
}

/// Local minimization of the sum of the `k` smallest squared singular values
/// of the stacked operators over frames `U`.
pub(crate) fn climb(form: &SymmetricBilinearForm, start: &DMatrix<f64>, k: usize, threshold: f64) -> DMatrix<f64> {
    climb_screened(form, start, k, threshold, f64::INFINITY).expect("unscreened climb")
}

/// [`climb`] that gives up before polishing when the alternating objective
/// stays above `screen · ‖β‖²`.
fn climb_screened(form: &SymmetricBilinearForm, start: &DMatrix<f64>, k: usize, threshold: f64, screen: f64) -> Option<DMatrix<f64>> {
    const MAX_ALTERNATIONS: usize = 400;
    let (p, s) = (start.nrows(), start.ncols());
    let scale2 = form.scale().powi(2).max(f64::MIN_POSITIVE);
    let mut frame = start.clone();
    let mut kernel = kernel_guess(form, &frame, k);
    let mut previous = f64::INFINITY;
    let mut phi = f64::INFINITY;
    for _ in 0..MAX_ALTERNATIONS {
        // U-step: minimize Σⱼ uⱼᵀ C uⱼ with C_ab = tr(Kᵀ Aᵃ Aᵇ K)
        let images: Vec<DMatrix<f64>> = form.ops().iter().map(|a| a * &kernel).collect();
        let c = DMatrix::from_fn(p, p, |a, b| images[a].dot(&images[b]));
        let (u, value) = smallest_eigenvectors(&c, s);
        phi = value;
        frame = u;
        kernel = kernel_guess(form, &frame, k);
        if phi <= 1e-12 * scale2 || previous - phi <= 1e-10 * previous {
            break;
        }
        previous = phi;
    }
    if phi > screen * scale2 {
        return None;
    }
    Some(gauss_newton_polish(form, frame, kernel, threshold))
}

/// Gauss–Newton on `A_{uⱼ} K = 0` (bilinear in `U` and `K`), keeping the
/// iterate with the smallest residual.
fn gauss_newton_polish(
    form: &SymmetricBilinearForm,
    mut frame: DMatrix<f64>,
    mut kernel: DMatrix<f64>,
    threshold: f64,
) -> DMatrix<f64> {
    let (n, p) = (form.n(), form.p());
    let (s, k) = (frame.ncols(), kernel.ncols());
    let rows = s * n * k;
    let cols = p * s + n * k;
    let residual = |frame: &DMatrix<f64>, kernel: &DMatrix<f64>| -> DMatrix<f64> {
        let mut r = DMatrix::zeros(s * n, k);
        for j in 0..s {
            let a = form.shape_operator(&frame.column(j).into_owned());
            r.view_mut((j * n, 0), (n, k)).copy_from(&(a * kernel));
        }
        r
    };
    let mut r = residual(&frame, &kernel);
    let mut best = (r.norm(), frame.clone());
    let (mut previous, mut stalls) = (best.0, 0);
    for _ in 0..40 {
        if best.0 <= 1e-3 * threshold {
            break;
        }
        let images: Vec<DMatrix<f64>> = form.ops().iter().map(|a| a * &kernel).collect();
        let shapes: Vec<DMatrix<f64>> = (0..s).map(|j| form.shape_operator(&frame.column(j).into_owned())).collect();
        let mut jac = DMatrix::zeros(rows, cols);
        for c in 0..k {
            for j in 0..s {
                for i in 0..n {
                    let row = c * s * n + j * n + i;
                    for a in 0..p {
                        jac[(row, j * p + a)] = images[a][(i, c)];
                    }
                    for col in 0..n {
                        jac[(row, p * s + c * n + col)] = shapes[j][(i, col)];
                    }
                }
            }
        }
        let rhs = -nalgebra::DVector::from_column_slice(r.as_slice());
        let step = linalg::lstsq(&jac, &rhs, 1e-12);
        let du = DMatrix::from_column_slice(p, s, &step.as_slice()[..p * s]);
        let dk = DMatrix::from_column_slice(n, k, &step.as_slice()[p * s..]);
        frame = linalg::orthonormalize(&(&frame + du));
        kernel = linalg::orthonormalize(&(&kernel + dk));
        r = residual(&frame, &kernel);
        let norm = r.norm();
        // near a true solution the residual keeps dropping
        stalls = if norm > 0.9 * previous { stalls + 1 } else { 0 };
        previous = norm;
        if norm < best.0 {
            best = (norm, frame.clone());
        } else if norm > 10.0 * best.0 {
            break;
        }
        if stalls >= 4 {
            break;
        }
    }
    best.1
}
