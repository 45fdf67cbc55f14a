//! Dense linear algebra helpers shared by the geometric modules.
//!
//! Everything here works on `nalgebra` dynamic matrices. Ranks and kernels
//! are rank-revealing through the SVD; a singular value counts as zero when
//! it falls below an absolute threshold supplied by the caller.

use nalgebra::{DMatrix, DVector, Dyn, SVD};
use rand::Rng;
use rand_distr::StandardNormal;

/// Singular values in descending order.
pub fn singular_values(m: &DMatrix<f64>) -> Vec<f64> {
    if m.nrows() == 0 || m.ncols() == 0 {
        return Vec::new();
    }
    let fast = SVD::try_new_unordered(m.clone(), false, false, f64::EPSILON, 10_000)
        .map(|s| s.singular_values)
        .filter(|v| v.iter().all(|x| x.is_finite()));
    let mut sv: Vec<f64> = fast.unwrap_or_else(|| svd(m).singular_values).iter().copied().collect();
    sv.sort_by(|a, b| b.total_cmp(a));
    sv
}

/// Numerical rank: number of singular values strictly above `abs_tol`.
pub fn rank(m: &DMatrix<f64>, abs_tol: f64) -> usize {
    singular_values(m).iter().filter(|&&s| s > abs_tol).count()
}

/// Largest singular value (spectral norm); zero for empty matrices.
pub fn spectral_norm(m: &DMatrix<f64>) -> f64 {
    singular_values(m).first().copied().unwrap_or(0.0)
}

/// Right singular vectors and the full list of singular values of `m`.
///
/// The matrix is padded with zero rows when it is wide so that the SVD
/// returns a complete orthonormal basis of the domain. Columns of the
/// returned matrix are ordered by decreasing singular value; the trailing
/// columns beyond `min(rows, cols)` carry singular value zero.
pub fn right_singular_basis(m: &DMatrix<f64>) -> (Vec<f64>, DMatrix<f64>) {
    let n = m.ncols();
    if n == 0 {
        return (Vec::new(), DMatrix::zeros(0, 0));
    }
    let padded = if m.nrows() < n {
        let mut p = DMatrix::zeros(n, n);
        p.view_mut((0, 0), (m.nrows(), n)).copy_from(m);
        p
    } else {
        m.clone()
    };
    let svd = svd(&padded);
    let v_t = svd.v_t.expect("requested v_t");
    let mut order: Vec<usize> = (0..svd.singular_values.len()).collect();
    order.sort_by(|&a, &b| svd.singular_values[b].total_cmp(&svd.singular_values[a]));
    let mut basis = DMatrix::zeros(n, n);
    let mut values = Vec::with_capacity(n);
    for (col, &k) in order.iter().enumerate() {
        basis.set_column(col, &v_t.row(k).transpose());
        values.push(svd.singular_values[k]);
    }
    (values, basis)
}

/// Full SVD (unordered) that never yields NaN for finite input. The
/// implicit QR iteration in nalgebra occasionally breaks down on sparse
/// block matrices; the transpose is tried next, then the eigenvectors of
/// `AᵀA`.
pub fn svd(a: &DMatrix<f64>) -> SVD<f64, Dyn, Dyn> {
    let finite = |s: &SVD<f64, Dyn, Dyn>| {
        s.singular_values.iter().all(|x| x.is_finite())
            && s.u.as_ref().is_some_and(|u| u.iter().all(|x| x.is_finite()))
            && s.v_t.as_ref().is_some_and(|v| v.iter().all(|x| x.is_finite()))
    };
    if let Some(s) = SVD::try_new_unordered(a.clone(), true, true, f64::EPSILON, 10_000).filter(finite) {
        return s;
    }
    if let Some(t) = SVD::try_new_unordered(a.transpose(), true, true, f64::EPSILON, 10_000).filter(finite) {
        return SVD { u: t.v_t.map(|v| v.transpose()), v_t: t.u.map(|u| u.transpose()), singular_values: t.singular_values };
    }
    let (m, n) = a.shape();
    let r = m.min(n);
    let eig = (a.transpose() * a).symmetric_eigen();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&x, &y| eig.eigenvalues[y].total_cmp(&eig.eigenvalues[x]));
    let mut u = DMatrix::zeros(m, r);
    let mut v_t = DMatrix::zeros(r, n);
    let mut values = DVector::zeros(r);
    for (c, &i) in order.iter().take(r).enumerate() {
        let v = eig.eigenvectors.column(i);
        let sigma = eig.eigenvalues[i].max(0.0).sqrt();
        v_t.set_row(c, &v.transpose());
        values[c] = sigma;
        if sigma > 0.0 {
            u.set_column(c, &((a * v) / sigma));
        }
    }
    SVD { u: Some(u), v_t: Some(v_t), singular_values: values }
}

/// Minimum-norm least-squares solution of `j x = b`, dropping singular
/// values below `rel_cutoff · σ_max`. Tall systems are first reduced by a
/// QR factorization, so the SVD only sees the square factor `R`.
pub fn lstsq(j: &DMatrix<f64>, b: &DVector<f64>, rel_cutoff: f64) -> DVector<f64> {
    let (a, rhs) = if j.nrows() > j.ncols() {
        let qr = j.clone().qr();
        let mut qtb = b.clone();
        qr.q_tr_mul(&mut qtb);
        (qr.r(), qtb.rows(0, j.ncols()).into_owned())
    } else {
        (j.clone(), b.clone())
    };
    let svd = svd(&a);
    let top = svd.singular_values.max();
    if top <= 0.0 {
        return DVector::zeros(j.ncols());
    }
    svd.solve(&rhs, rel_cutoff * top).unwrap_or_else(|_| DVector::zeros(j.ncols()))
}

/// Orthonormal basis (as columns) of the kernel of `m`.
pub fn kernel_basis(m: &DMatrix<f64>, abs_tol: f64) -> DMatrix<f64> {
    let n = m.ncols();
    let (values, basis) = right_singular_basis(m);
    let r = values.iter().filter(|&&s| s > abs_tol).count();
    basis.columns(r, n - r).into_owned()
}

/// Orthonormal basis of the column space of `m`.
pub fn range_basis(m: &DMatrix<f64>, abs_tol: f64) -> DMatrix<f64> {
    if m.ncols() == 0 || m.nrows() == 0 {
        return DMatrix::zeros(m.nrows(), 0);
    }
    let t = m.transpose();
    let (values, basis) = right_singular_basis(&t);
    let r = values.iter().filter(|&&s| s > abs_tol).count();
    basis.columns(0, r).into_owned()
}

/// Thin QR orthonormalization of the columns of `m` (assumed full rank).
pub fn orthonormalize(m: &DMatrix<f64>) -> DMatrix<f64> {
    let qr = m.clone().qr();
    let mut q = qr.q();
    let r = qr.r();
    // fix signs so that the result depends continuously on the input
    for j in 0..q.ncols().min(r.nrows()) {
        if r[(j, j)] < 0.0 {
            let col = -q.column(j);
            q.set_column(j, &col);
        }
    }
    q
}

/// Maximum entry of |FᵀF − I|.
pub fn orthonormality_defect(frame: &DMatrix<f64>) -> f64 {
    let g = frame.transpose() * frame;
    let k = g.nrows();
    (g - DMatrix::<f64>::identity(k, k)).amax()
}

/// Gaussian random matrix.
pub fn gaussian_matrix<R: Rng + ?Sized>(rows: usize, cols: usize, rng: &mut R) -> DMatrix<f64> {
    DMatrix::from_fn(rows, cols, |_, _| rng.sample(StandardNormal))
}

/// Gaussian random vector.
pub fn gaussian_vector<R: Rng + ?Sized>(len: usize, rng: &mut R) -> DVector<f64> {
    DVector::from_fn(len, |_, _| rng.sample(StandardNormal))
}

/// Random symmetric matrix with independent Gaussian entries on and above the diagonal.
pub fn gaussian_symmetric<R: Rng + ?Sized>(n: usize, rng: &mut R) -> DMatrix<f64> {
    let g = gaussian_matrix(n, n, rng);
    (&g + g.transpose()) * std::f64::consts::FRAC_1_SQRT_2
}

/// Haar-distributed orthogonal matrix.
pub fn random_orthogonal<R: Rng + ?Sized>(n: usize, rng: &mut R) -> DMatrix<f64> {
    orthonormalize(&gaussian_matrix(n, n, rng))
}

/// Random orthonormal `rows × cols` frame.
pub fn random_frame<R: Rng + ?Sized>(rows: usize, cols: usize, rng: &mut R) -> DMatrix<f64> {
    orthonormalize(&gaussian_matrix(rows, cols, rng))
}

/// Random unit vector.
pub fn random_unit<R: Rng + ?Sized>(len: usize, rng: &mut R) -> DVector<f64> {
    loop {
        let v = gaussian_vector(len, rng);
        let n = v.norm();
        if n > 1e-12 {
            return v / n;
        }
    }
}

/// Orthonormal completion of the column span of `basis` inside `Rⁿ`.
///
/// Returns the added columns only. Candidates are standard basis vectors and
/// at each step the one with the largest residual is taken (lowest index on
/// ties), so the result is deterministic.
pub fn orthonormal_complement(basis: &DMatrix<f64>, n: usize) -> DMatrix<f64> {
    complement_with_pairing(basis, n, &|x: &DVector<f64>, y: &DVector<f64>| x.dot(y))
}

/// Orthonormal completion with respect to an arbitrary pairing that is
/// positive definite on the complement being built.
///
/// `basis` columns must already be orthonormal (entries ±1 allowed on the
/// diagonal of the Gram matrix for timelike directions).
pub fn complement_with_pairing(
    basis: &DMatrix<f64>,
    n: usize,
    pair: &dyn Fn(&DVector<f64>, &DVector<f64>) -> f64,
) -> DMatrix<f64> {
    let mut current: Vec<(DVector<f64>, f64)> = basis
        .column_iter()
        .map(|c| {
            let v = c.into_owned();
            let s = pair(&v, &v);
            (v, s)
        })
        .collect();
    let target = n.saturating_sub(current.len());
    let mut added: Vec<DVector<f64>> = Vec::with_capacity(target);
    let project_out = |v: &DVector<f64>, against: &[(DVector<f64>, f64)]| {
        let mut r = v.clone();
        // two passes of modified Gram-Schmidt
        for _ in 0..2 {
            for (b, s) in against {
                let c = pair(&r, b) / s;
                r -= b * c;
            }
        }
        r
    };
    while added.len() < target {
        let mut best: Option<(f64, DVector<f64>)> = None;
        for i in 0..n {
            let mut e = DVector::zeros(n);
            e[i] = 1.0;
            let r = project_out(&e, &current);
            let s = pair(&r, &r);
            if s > 1e-10 && best.as_ref().is_none_or(|(bs, _)| s > *bs + 1e-12) {
                best = Some((s, r));
            }
        }
        let Some((s, r)) = best else { break };
        let u = r / s.sqrt();
        current.push((u.clone(), 1.0));
        added.push(u);
    }
    if added.is_empty() {
        DMatrix::zeros(n, 0)
    } else {
        DMatrix::from_columns(&added)
    }
}

/// Horizontal concatenation of column blocks with the same row count.
pub fn hcat(blocks: &[&DMatrix<f64>], rows: usize) -> DMatrix<f64> {
    let cols: usize = blocks.iter().map(|b| b.ncols()).sum();
    let mut out = DMatrix::zeros(rows, cols);
    let mut at = 0;
    for b in blocks {
        out.view_mut((0, at), (rows, b.ncols())).copy_from(b);
        at += b.ncols();
    }
    out
}

/// Vertical concatenation of row blocks with the same column count.
pub fn vcat(blocks: &[DMatrix<f64>], cols: usize) -> DMatrix<f64> {
    let rows: usize = blocks.iter().map(|b| b.nrows()).sum();
    let mut out = DMatrix::zeros(rows, cols);
    let mut at = 0;
    for b in blocks {
        out.view_mut((at, 0), (b.nrows(), cols)).copy_from(b);
        at += b.nrows();
    }
    out
}

/// Symmetric inverse square root of an SPD matrix.
pub fn inv_sqrt_spd(g: &DMatrix<f64>) -> Option<DMatrix<f64>> {
    let eig = g.clone().symmetric_eigen();
    if eig.eigenvalues.iter().any(|&l| l <= 0.0) {
        return None;
    }
    let d = DMatrix::from_diagonal(&eig.eigenvalues.map(|l| 1.0 / l.sqrt()));
    Some(&eig.eigenvectors * d * eig.eigenvectors.transpose())
}

/// Derives an independent stream seed from a base seed and two indices
/// (splitmix64 finalizer), so that per-start and per-trial generators do not
/// depend on scheduling.
pub fn derive_seed(seed: u64, a: u64, b: u64) -> u64 {
    let mut z = seed
        ^ a.wrapping_mul(0x9E37_79B9_7F4A_7C15)
        ^ b.wrapping_mul(0xC2B2_AE3D_27D4_EB4F).rotate_left(17);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn kernel_of_wide_matrix_is_complete() {
        let m = DMatrix::from_row_slice(1, 3, &[1.0, 0.0, 0.0]);
        let k = kernel_basis(&m, 1e-12);
        assert_eq!(k.ncols(), 2);
        assert!((&m * &k).amax() < 1e-14);
        assert!(orthonormality_defect(&k) < 1e-14);
    }

    #[test]
    fn complement_spans_the_rest() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let f = random_frame(5, 2, &mut rng);
        let c = orthonormal_complement(&f, 5);
        assert_eq!(c.ncols(), 3);
        let all = hcat(&[&f, &c], 5);
        assert!(orthonormality_defect(&all) < 1e-12);
    }

    #[test]
    fn lorentz_complement_is_spacelike() {
        let pair = |x: &DVector<f64>, y: &DVector<f64>| -x[0] * y[0] + x[1] * y[1] + x[2] * y[2];
        // point on the upper sheet of the unit hyperboloid, unit timelike
        let t: f64 = 0.7;
        let p = DMatrix::from_column_slice(3, 1, &[t.cosh(), t.sinh(), 0.0]);
        let c = complement_with_pairing(&p, 3, &pair);
        assert_eq!(c.ncols(), 2);
        for i in 0..2 {
            let u = c.column(i).into_owned();
            assert!((pair(&u, &u) - 1.0).abs() < 1e-12);
            assert!(pair(&u, &p.column(0).into_owned()).abs() < 1e-12);
        }
    }

    #[test]
    fn rank_counts_above_threshold() {
        let m = DMatrix::from_diagonal(&DVector::from_vec(vec![3.0, 1e-3, 1e-14]));
        assert_eq!(rank(&m, 1e-10), 2);
        assert_eq!(range_basis(&m, 1e-10).ncols(), 2);
    }
}
