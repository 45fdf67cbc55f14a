//! Finest orthogonal splitting in which every shape operator is block diagonal.
//!
//! A random combination `T = Σ wₐ Âᵃ` of the normalized operators is
//! diagonalized. Eigenvectors of nearly equal eigenvalues form initial
//! clusters; clusters on which every operator is a multiple of the identity
//! are split into lines. Clusters coupled by an off-block entry above `tol`
//! in any `Âᵃ` are then merged (connected components). Several draws of `w`
//! are made and the one with the most blocks is kept.

use nalgebra::DMatrix;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::OrthogonalSplitting;
use crate::forms::SymmetricBilinearForm;
use crate::linalg;

const DEFAULT_DRAWS: usize = 3;
const DEFAULT_SEED: u64 = 0x5eed;

/// [`detect_adapted_splitting_seeded`] with three draws and a fixed seed.
pub fn detect_adapted_splitting(form: &SymmetricBilinearForm, tol: f64) -> OrthogonalSplitting {
    detect_adapted_splitting_seeded(form, tol, DEFAULT_DRAWS, DEFAULT_SEED)
}

pub fn detect_adapted_splitting_seeded(form: &SymmetricBilinearForm, tol: f64, draws: usize, seed: u64) -> OrthogonalSplitting {
    let n = form.n();
    let normalized: Vec<DMatrix<f64>> = form
        .ops()
        .iter()
        .filter_map(|a| {
            let norm = a.norm();
            (norm > 0.0).then(|| a / norm)
        })
        .collect();
    if normalized.is_empty() {
        return OrthogonalSplitting::coordinate(&vec![1; n]);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut best: Option<OrthogonalSplitting> = None;
    for _ in 0..draws.max(1) {
        let w = linalg::random_unit(normalized.len(), &mut rng);
        let candidate = one_draw(&normalized, &w, n, tol);
        if best.as_ref().is_none_or(|b| candidate.blocks().len() > b.blocks().len()) {
            best = Some(candidate);
        }
    }
    best.expect("at least one draw")
}

fn one_draw(ops: &[DMatrix<f64>], w: &nalgebra::DVector<f64>, n: usize, tol: f64) -> OrthogonalSplitting {
    let mut t = DMatrix::zeros(n, n);
    for (a, op) in ops.iter().enumerate() {
        t += op * w[a];
    }
    let eig = t.symmetric_eigen();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let vectors = DMatrix::from_fn(n, n, |i, j| eig.eigenvectors[(i, order[j])]);
    let values: Vec<f64> = order.iter().map(|&i| eig.eigenvalues[i]).collect();

    // clusters of nearly equal eigenvalues
    let gap = tol.sqrt();
    let mut clusters: Vec<Vec<usize>> = Vec::new();
    for j in 0..n {
        match clusters.last_mut() {
            Some(c) if values[j] - values[*c.last().unwrap()] <= gap => c.push(j),
            _ => clusters.push(vec![j]),
        }
    }
    let rotated: Vec<DMatrix<f64>> = ops.iter().map(|a| vectors.transpose() * a * &vectors).collect();
    let mut pieces: Vec<Vec<usize>> = Vec::new();
    for c in clusters {
        if c.len() > 1 && rotated.iter().all(|a| is_scalar_on(a, &c, tol)) {
            pieces.extend(c.into_iter().map(|j| vec![j]));
        } else {
            pieces.push(c);
        }
    }

    // merge coupled pieces
    let m = pieces.len();
    let mut parent: Vec<usize> = (0..m).collect();
    fn find(parent: &mut [usize], i: usize) -> usize {
        let mut r = i;
        while parent[r] != r {
            r = parent[r];
        }
        parent[i] = r;
        r
    }
    for x in 0..m {
        for y in (x + 1)..m {
            let coupled = rotated.iter().any(|a| pieces[x].iter().any(|&i| pieces[y].iter().any(|&j| a[(i, j)].abs() > tol)));
            if coupled {
                let (rx, ry) = (find(&mut parent, x), find(&mut parent, y));
                if rx != ry {
                    parent[rx.max(ry)] = rx.min(ry);
                }
            }
        }
    }
    let mut groups: Vec<(usize, Vec<usize>)> = Vec::new();
    for (x, piece) in pieces.iter().enumerate() {
        let root = find(&mut parent, x);
        match groups.iter_mut().find(|(r, _)| *r == root) {
            Some((_, g)) => g.extend(piece),
            None => groups.push((root, piece.clone())),
        }
    }
    let blocks = groups
        .into_iter()
        .map(|(_, mut cols)| {
            cols.sort_unstable();
            DMatrix::from_fn(n, cols.len(), |i, j| vectors[(i, cols[j])])
        })
        .collect();
    OrthogonalSplitting::new(n, blocks, 1e-8).expect("eigenvectors of a symmetric matrix")
}

fn is_scalar_on(a: &DMatrix<f64>, idx: &[usize], tol: f64) -> bool {
    let first = a[(idx[0], idx[0])];
    idx.iter().all(|&i| idx.iter().all(|&j| {
        let target = if i == j { first } else { 0.0 };
        (a[(i, j)] - target).abs() <= tol
    }))
}

/// Largest off-block entry of the normalized operators in the basis of `split`.
pub fn off_block_residual(form: &SymmetricBilinearForm, split: &OrthogonalSplitting) -> f64 {
    let mut worst: f64 = 0.0;
    let blocks = split.blocks();
    for a in form.ops() {
        let norm = a.norm();
        if norm == 0.0 {
            continue;
        }
        for (i, bi) in blocks.iter().enumerate() {
            for bj in blocks.iter().skip(i + 1) {
                worst = worst.max((bi.transpose() * a * bj).amax() / norm);
            }
        }
    }
    worst
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::DVector;

    fn diag(v: &[f64]) -> DMatrix<f64> {
        DMatrix::from_diagonal(&DVector::from_row_slice(v))
    }

    #[test]
    fn distinct_spectrum_gives_lines() {
        let f = SymmetricBilinearForm::new(vec![diag(&[1.0, 2.0, 3.0])], 0.0).unwrap();
        let s = detect_adapted_splitting(&f, 1e-8);
        assert_eq!(s.dims(), vec![1, 1, 1]);
    }

    #[test]
    fn diagonal_family_splits_into_lines() {
        let f = SymmetricBilinearForm::new(vec![diag(&[1.0, 1.0, 0.0, 0.0]), diag(&[0.0, 0.0, 1.0, 1.0])], 0.0).unwrap();
        let s = detect_adapted_splitting(&f, 1e-8);
        assert_eq!(s.dims(), vec![1, 1, 1, 1]);
        assert!(off_block_residual(&f, &s) <= 1e-8);
    }

    #[test]
    fn coupled_blocks_stay_together() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let mut ops = Vec::new();
        for _ in 0..2 {
            let mut a = DMatrix::zeros(5, 5);
            a.view_mut((0, 0), (2, 2)).copy_from(&linalg::gaussian_symmetric(2, &mut rng));
            a.view_mut((2, 2), (3, 3)).copy_from(&linalg::gaussian_symmetric(3, &mut rng));
            ops.push(a);
        }
        let f = SymmetricBilinearForm::new(ops, 0.0).unwrap();
        let s = detect_adapted_splitting(&f, 1e-8);
        let mut dims = s.dims();
        dims.sort_unstable();
        assert_eq!(dims, vec![2, 3]);
        assert!(off_block_residual(&f, &s) <= 1e-8);
    }
}
