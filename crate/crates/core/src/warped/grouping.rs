//! Grouping of linearly dependent warping functions.
//!
//! Two sampled warpings are dependent when `‖ρᵢ − λρⱼ‖ ≤ tol·‖ρⱼ‖` for the
//! least-squares `λ = ⟨ρᵢ,ρⱼ⟩/⟨ρⱼ,ρⱼ⟩`. Groups are the connected components
//! of this relation; each group is represented by its smallest index and
//! `λᵢ` satisfies `ρᵢ ≈ λᵢ ρ_rep`. A homothety of factor `i` by `λᵢ²` then
//! gives all members of a group the same warping function.

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use super::{WarpedError, WarpedMetricSpec};

/// Relative variation below which a sampled function counts as constant.
pub const CONSTANCY_TOL: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct WarpingGroups {
    /// 1-based factor indices, each group sorted, groups ordered by first member.
    pub groups: Vec<Vec<usize>>,
    /// `λᵢ` for factors `1..=k` (index `i − 1`); 1 for group representatives.
    pub lambdas: Vec<f64>,
    /// Largest relative least-squares residual inside a group.
    pub max_residual: f64,
}

impl WarpingGroups {
    /// Group containing factor `i` (1-based).
    pub fn group_of(&self, i: usize) -> Option<usize> {
        self.groups.iter().position(|g| g.contains(&i))
    }
}

/// `true` when `(max − min) ≤ tol·max|v|` over the samples.
pub fn is_constant(samples: &[f64], tol: f64) -> bool {
    let max = samples.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let min = samples.iter().copied().fold(f64::INFINITY, f64::min);
    let scale = samples.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    max - min <= tol * scale
}

fn ratio(a: &DVector<f64>, b: &DVector<f64>) -> (f64, f64) {
    let lambda = a.dot(b) / b.dot(b);
    let residual = (a - b * lambda).norm() / b.norm();
    (lambda, residual)
}

/// Groups warping functions given by their samples on a common grid.
pub fn group_warping_samples(samples: &[Vec<f64>], tol: f64) -> Result<WarpingGroups, WarpedError> {
    let k = samples.len();
    let points = samples.first().map_or(0, |s| s.len());
    if samples.iter().any(|s| s.len() != points) {
        return Err(WarpedError::DegenerateGrid("sample rows of different lengths".into()));
    }
    if k > 0 && points < 2 {
        return Err(WarpedError::DegenerateGrid(format!("{points} sample point(s), need at least 2")));
    }
    let vecs: Vec<DVector<f64>> = samples.iter().map(|s| DVector::from_column_slice(s)).collect();
    if let Some(i) = vecs.iter().position(|v| v.norm() == 0.0 || !v.iter().all(|x| x.is_finite())) {
        return Err(WarpedError::DegenerateGrid(format!("warping {} vanishes or is not finite on the grid", i + 1)));
    }
    let mut parent: Vec<usize> = (0..k).collect();
    fn find(parent: &mut [usize], i: usize) -> usize {
        let mut r = i;
        while parent[r] != r {
            r = parent[r];
        }
        parent[i] = r;
        r
    }
    for i in 0..k {
        for j in (i + 1)..k {
            let (_, r1) = ratio(&vecs[j], &vecs[i]);
            let (_, r2) = ratio(&vecs[i], &vecs[j]);
            if r1.max(r2) <= tol {
                let (ri, rj) = (find(&mut parent, i), find(&mut parent, j));
                if ri != rj {
                    parent[ri.max(rj)] = ri.min(rj);
                }
            }
        }
    }
    let mut groups: Vec<Vec<usize>> = Vec::new();
    let mut reps: Vec<usize> = Vec::new();
    for i in 0..k {
        let r = find(&mut parent, i);
        match reps.iter().position(|&x| x == r) {
            Some(g) => groups[g].push(i + 1),
            None => {
                reps.push(r);
                groups.push(vec![i + 1]);
            }
        }
    }
    let mut lambdas = vec![1.0; k];
    let mut max_residual: f64 = 0.0;
    for g in &groups {
        let rep = g[0] - 1;
        for &m in &g[1..] {
            let (lambda, res) = ratio(&vecs[m - 1], &vecs[rep]);
            lambdas[m - 1] = lambda;
            max_residual = max_residual.max(res);
        }
    }
    Ok(WarpingGroups { groups, lambdas, max_residual })
}

/// Samples the warpings of `spec` at base points `grid` and groups them.
pub fn group_warpings(spec: &WarpedMetricSpec, grid: &[DVector<f64>], tol: f64) -> Result<WarpingGroups, WarpedError> {
    let n0 = spec.dims()[0];
    if let Some(p) = grid.iter().find(|p| p.len() != n0) {
        return Err(WarpedError::DimensionMismatch { expected: n0, got: p.len() });
    }
    let distinct = grid.len() >= 2 && grid.iter().any(|p| (p - &grid[0]).amax() > 0.0);
    if !distinct {
        return Err(WarpedError::DegenerateGrid("need at least 2 distinct base points".into()));
    }
    let samples: Vec<Vec<f64>> = spec.warpings().iter().map(|w| grid.iter().map(|p| w.value(p)).collect()).collect();
    group_warping_samples(&samples, tol)
}
