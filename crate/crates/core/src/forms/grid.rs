//! Deterministic sweep of `Gr(s, p)` for `p ≤ 3`.
//!
//! `Gr(1, 2)` is parametrized by an angle `θ ∈ [0, π)`, `Gr(1, 3)` and
//! `Gr(2, 3)` by the line `u(θ, φ)` (the plane is `u^⊥`) with `θ ∈ [0, π/2]`
//! and `φ ∈ [0, 2π)`. The nullity is evaluated at every grid point. Since the
//! nullity only jumps up on thin sets, each profile `σ_(k)` (the `k`-th
//! smallest singular value of the stacked operators) is also refined from
//! its grid-local minima. A minimum is a candidate only when its grid value
//! is small enough, given the Lipschitz bound `|∂σ_(k)| ≤ (Σₐ ‖Aᵃ‖₂²)^½` per
//! radian, for a zero to lie within one grid cell of it. On `Gr(1, 2)` the
//! refinement is a golden-section search within one cell on each side; on
//! the two-parameter Grassmannians it is the local descent of the multistart
//! search started at the grid frame, tried on at most 48 candidates per
//! target, smallest grid values first.

use nalgebra::DMatrix;

use super::nullity::{climb, nullity_raw, zero_threshold};
use super::{FormError, SymmetricBilinearForm};
use crate::linalg;

const INV_PHI: f64 = 0.618_033_988_749_894_9;
/// Refinements attempted per target kernel dimension, smallest grid values first.
const MAX_REFINEMENTS: usize = 48;

/// Frame for the grid parameters of `Gr(s, p)`.
pub fn frame_at(p: usize, s: usize, params: &[f64]) -> DMatrix<f64> {
    match (p, s) {
        (2, 1) => DMatrix::from_column_slice(2, 1, &[params[0].cos(), params[0].sin()]),
        (3, 1) | (3, 2) => {
            let (t, f) = (params[0], params[1]);
            let u = DMatrix::from_column_slice(3, 1, &[t.sin() * f.cos(), t.sin() * f.sin(), t.cos()]);
            if s == 1 {
                u
            } else {
                linalg::orthonormal_complement(&u, 3)
            }
        }
        _ => DMatrix::identity(p, s),
    }
}

fn ascending_singular_values(form: &SymmetricBilinearForm, frame: &DMatrix<f64>) -> Vec<f64> {
    let mut sv = linalg::singular_values(&form.stacked(frame));
    sv.reverse();
    sv.resize(form.n(), 0.0);
    sv
}

fn golden_section(f: &dyn Fn(f64) -> f64, mut a: f64, mut b: f64) -> (f64, f64) {
    let mut c = b - INV_PHI * (b - a);
    let mut d = a + INV_PHI * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    for _ in 0..120 {
        if (b - a).abs() <= 1e-16 * (1.0 + a.abs().max(b.abs())) {
            break;
        }
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - INV_PHI * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + INV_PHI * (b - a);
            fd = f(d);
        }
    }
    if fc < fd {
        (c, fc)
    } else {
        (d, fd)
    }
}

struct Grid {
    /// Parameter values per axis.
    axes: Vec<Vec<f64>>,
    /// Whether each axis wraps around.
    periodic: Vec<bool>,
    steps: Vec<f64>,
}

impl Grid {
    fn new(p: usize, s: usize, res: usize, res_2d: usize) -> Option<Self> {
        match (p, s) {
            (2, 1) => {
                let step = std::f64::consts::PI / res as f64;
                Some(Self { axes: vec![(0..res).map(|i| i as f64 * step).collect()], periodic: vec![true], steps: vec![step] })
            }
            (3, 1) | (3, 2) => {
                let m = res_2d.max(2);
                let step_t = std::f64::consts::FRAC_PI_2 / (m - 1) as f64;
                let step_f = 2.0 * std::f64::consts::PI / m as f64;
                Some(Self {
                    axes: vec![(0..m).map(|i| i as f64 * step_t).collect(), (0..m).map(|j| j as f64 * step_f).collect()],
                    periodic: vec![false, true],
                    steps: vec![step_t, step_f],
                })
            }
            _ => None,
        }
    }

    fn len(&self) -> usize {
        self.axes.iter().map(Vec::len).product()
    }

    fn index(&self, flat: usize) -> Vec<usize> {
        let mut out = Vec::with_capacity(self.axes.len());
        let mut rem = flat;
        for axis in self.axes.iter().rev() {
            out.push(rem % axis.len());
            rem /= axis.len();
        }
        out.reverse();
        out
    }

    fn flat(&self, idx: &[usize]) -> usize {
        idx.iter().zip(&self.axes).fold(0, |acc, (&i, axis)| acc * axis.len() + i)
    }

    fn params(&self, idx: &[usize]) -> Vec<f64> {
        idx.iter().zip(&self.axes).map(|(&i, axis)| axis[i]).collect()
    }

    fn neighbors(&self, idx: &[usize]) -> Vec<usize> {
        let dims = self.axes.len();
        let mut out = Vec::new();
        let offsets: Vec<Vec<i64>> = if dims == 1 {
            vec![vec![-1], vec![1]]
        } else {
            let mut o = Vec::new();
            for a in -1..=1 {
                for b in -1..=1 {
                    if a != 0 || b != 0 {
                        o.push(vec![a, b]);
                    }
                }
            }
            o
        };
        'next: for off in offsets {
            let mut cand = Vec::with_capacity(dims);
            for d in 0..dims {
                let len = self.axes[d].len() as i64;
                let mut v = idx[d] as i64 + off[d];
                if self.periodic[d] {
                    v = v.rem_euclid(len);
                } else if v < 0 || v >= len {
                    continue 'next;
                }
                cand.push(v as usize);
            }
            out.push(self.flat(&cand));
        }
        out
    }

    /// Largest parameter distance from any point to the nearest grid point.
    fn cell_radius(&self) -> f64 {
        self.steps.iter().map(|s| (0.5 * s).powi(2)).sum::<f64>().sqrt()
    }
}

/// Maximum nullity over the grid of `Gr(s, p)` and its refinements.
///
/// Ties are broken by the first point in sweep order (grid points first,
/// then refinements by increasing target `k`, grid value and grid index).
pub fn sweep_max(
    form: &SymmetricBilinearForm,
    s: usize,
    res: usize,
    res_2d: usize,
    rank_tol: f64,
) -> Result<(usize, DMatrix<f64>), FormError> {
    let (n, p) = (form.n(), form.p());
    if p > 3 {
        return Err(FormError::PTooLarge { p });
    }
    if s == 0 || s > p {
        return Err(FormError::SOutOfRange { s, p });
    }
    if res == 0 || res_2d == 0 {
        return Err(FormError::BudgetZero);
    }
    let threshold = zero_threshold(form, rank_tol);
    let Some(grid) = Grid::new(p, s, res, res_2d) else {
        let frame = DMatrix::identity(p, s);
        return Ok((nullity_raw(form, &frame, threshold), frame));
    };

    let total = grid.len();
    let mut profiles: Vec<Vec<f64>> = Vec::with_capacity(total);
    let mut best: Option<(usize, DMatrix<f64>)> = None;
    for flat in 0..total {
        let params = grid.params(&grid.index(flat));
        let frame = frame_at(p, s, &params);
        let sv = ascending_singular_values(form, &frame);
        let value = sv.iter().filter(|&&x| x <= threshold).count();
        if best.as_ref().is_none_or(|(b, _)| value > *b) {
            best = Some((value, frame));
        }
        profiles.push(sv);
    }
    let (mut best_value, mut best_frame) = best.expect("non-empty grid");

    // ‖A_u − A_u'‖₂ ≤ lip · |u − u'|
    let lip = form.ops().iter().map(|a| linalg::spectral_norm(a).powi(2)).sum::<f64>().sqrt();
    let screen = 2.0 * lip * grid.cell_radius();
    // a frame with nullity ≥ k + 1 also zeroes σ_(k), so targets are tried upwards
    // and the sweep stops at the first target no refinement reaches
    for k in (best_value + 1)..=n {
        let mut candidates: Vec<(f64, usize)> = Vec::new();
        for flat in 0..total {
            let v = profiles[flat][k - 1];
            if v <= threshold || v > screen {
                continue;
            }
            let nbrs = grid.neighbors(&grid.index(flat));
            let is_min = nbrs.iter().all(|&j| profiles[j][k - 1] >= v) && nbrs.iter().any(|&j| profiles[j][k - 1] > v);
            if is_min {
                candidates.push((v, flat));
            }
        }
        candidates.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        let mut reached = false;
        for &(_, flat) in candidates.iter().take(MAX_REFINEMENTS) {
            let params = grid.params(&grid.index(flat));
            let frame = if grid.axes.len() == 1 {
                frame_at(p, s, &[refine(form, k, params[0], grid.steps[0])])
            } else {
                climb(form, &frame_at(p, s, &params), k, threshold)
            };
            let value = nullity_raw(form, &frame, threshold);
            if value > best_value {
                best_value = value;
                best_frame = frame;
            }
            if best_value >= k {
                reached = true;
                break;
            }
        }
        if !reached {
            break;
        }
    }
    Ok((best_value, best_frame))
}

/// Golden-section search for a zero of `σ_(k)` on `Gr(1, 2)` within one
/// grid cell on each side of the start angle.
fn refine(form: &SymmetricBilinearForm, k: usize, theta: f64, step: f64) -> f64 {
    let line = |t: f64| ascending_singular_values(form, &frame_at(2, 1, &[t]))[k - 1];
    let (t, ft) = golden_section(&line, theta - step, theta + step);
    if ft < line(theta) {
        t
    } else {
        theta
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::DVector;

    #[test]
    fn constant_family_is_exact_at_coarse_resolution() {
        let f = SymmetricBilinearForm::zero(3, 2);
        assert_eq!(sweep_max(&f, 1, 2, 2, 1e-9).unwrap().0, 3);
    }

    #[test]
    fn irrational_direction_is_refined() {
        // A_θ = cos θ diag(1,1,1) + sin θ diag(a,b,c) is singular where tan θ = −1/a etc.
        let a = DMatrix::identity(3, 3);
        let b = DMatrix::from_diagonal(&DVector::from_vec(vec![-std::f64::consts::E, -std::f64::consts::E, 0.3]));
        let f = SymmetricBilinearForm::new(vec![a, b], 0.0).unwrap();
        let (v, w) = sweep_max(&f, 1, 720, 72, 1e-9).unwrap();
        assert_eq!(v, 2);
        let t = w[(1, 0)].atan2(w[(0, 0)]);
        assert!((t.tan() - 1.0 / std::f64::consts::E).abs() < 1e-9);
    }

    #[test]
    fn plane_sweep_finds_common_kernel() {
        // planes containing no e₃ component see ker = span(e₃) for ops diag(·,·,0)
        let ops = vec![
            DMatrix::from_diagonal(&DVector::from_vec(vec![1.0, 0.0, 0.0, 2.0])),
            DMatrix::from_diagonal(&DVector::from_vec(vec![0.0, 1.0, 0.0, 1.0])),
            DMatrix::from_diagonal(&DVector::from_vec(vec![0.0, 0.0, 1.0, 1.0])),
        ];
        let f = SymmetricBilinearForm::new(ops, 0.0).unwrap();
        // by hand: U = span(e₁, e₂) kills e₃, no plane kills two directions, and
        // every single direction leaves at most two zeros on the diagonal
        let (v, _) = sweep_max(&f, 2, 720, 40, 1e-9).unwrap();
        assert_eq!(v, 1);
        let (v1, _) = sweep_max(&f, 1, 720, 40, 1e-9).unwrap();
        assert_eq!(v1, 2);
    }
}
