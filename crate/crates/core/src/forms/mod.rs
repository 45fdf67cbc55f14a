//! Symmetric bilinear forms `β: V × V → W` with values in a Euclidean space.
//!
//! A form is stored as its family of shape operators `A¹ … Aᵖ`, one symmetric
//! `n × n` matrix per vector of an orthonormal basis of `W`, so that the
//! `a`-th component of `β(x, y)` is `xᵀ Aᵃ y`. The module also carries the
//! curvature-like tensor built from `β` by the Gauss equation and the
//! s-nullities of `β` (see [`nullity`]).

pub mod grid;
pub mod nullity;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use nullity::{
    common_kernel_dim, hypothesis_gate, nullity_at_subspace, nullity_profile, s_nullity, NullityConfig, NullityMode,
    GateOutcome, NullityReport, SNullity,
};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FormError {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("operator {index} is not symmetric: asymmetry {asymmetry:e} exceeds tolerance {tol:e}")]
    AsymmetryExceedsTol { index: usize, asymmetry: f64, tol: f64 },
    #[error("a form needs at least one shape operator (p >= 1)")]
    EmptyFamily,
    #[error("frame is not orthonormal: defect {defect:e}")]
    FrameNotOrthonormal { defect: f64 },
    #[error("search budget is zero")]
    BudgetZero,
    #[error("s = {s} is outside 1..={p}")]
    SOutOfRange { s: usize, p: usize },
    #[error("exhaustive Grassmannian sweep supports p <= 3, got p = {p}")]
    PTooLarge { p: usize },
}

/// Signature of a flat ambient pairing.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Signature {
    Euclidean,
    /// One minus sign, on coordinate 0.
    Lorentzian,
}

/// A flat inner-product space `Rⁿ` with Euclidean or Lorentzian pairing.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct InnerSpace {
    pub dim: usize,
    pub signature: Signature,
}

impl InnerSpace {
    pub fn euclidean(dim: usize) -> Self {
        assert!(dim >= 1, "inner space dimension must be positive");
        Self { dim, signature: Signature::Euclidean }
    }

    pub fn lorentzian(dim: usize) -> Self {
        assert!(dim >= 1, "inner space dimension must be positive");
        Self { dim, signature: Signature::Lorentzian }
    }

    pub fn pair(&self, x: &DVector<f64>, y: &DVector<f64>) -> f64 {
        let d = x.dot(y);
        match self.signature {
            Signature::Euclidean => d,
            Signature::Lorentzian => d - 2.0 * x[0] * y[0],
        }
    }

    pub fn norm_sq(&self, x: &DVector<f64>) -> f64 {
        self.pair(x, x)
    }

    /// Diagonal Gram matrix of the standard basis.
    pub fn metric(&self) -> DMatrix<f64> {
        let mut g = DMatrix::identity(self.dim, self.dim);
        if self.signature == Signature::Lorentzian {
            g[(0, 0)] = -1.0;
        }
        g
    }

    /// `Jᵀ η K` for the signature matrix `η`.
    pub fn gram(&self, j: &DMatrix<f64>, k: &DMatrix<f64>) -> DMatrix<f64> {
        j.transpose() * self.metric() * k
    }
}

/// A symmetric bilinear form given by its shape operators.
#[derive(Debug, Clone, PartialEq)]
pub struct SymmetricBilinearForm {
    n: usize,
    ops: Vec<DMatrix<f64>>,
    sym_tol: f64,
}

impl SymmetricBilinearForm {
    /// Builds a form from `p` square matrices, storing their symmetric parts.
    ///
    /// A matrix whose largest entry of `|A − Aᵀ|` exceeds `sym_tol` is rejected.
    pub fn new(matrices: Vec<DMatrix<f64>>, sym_tol: f64) -> Result<Self, FormError> {
        let Some(first) = matrices.first() else {
            return Err(FormError::EmptyFamily);
        };
        let n = first.nrows();
        let mut ops = Vec::with_capacity(matrices.len());
        for (index, m) in matrices.into_iter().enumerate() {
            if m.nrows() != n {
                return Err(FormError::DimensionMismatch { expected: n, got: m.nrows() });
            }
            if m.ncols() != n {
                return Err(FormError::DimensionMismatch { expected: n, got: m.ncols() });
            }
            let asymmetry = (&m - m.transpose()).amax();
            if asymmetry > sym_tol {
                return Err(FormError::AsymmetryExceedsTol { index, asymmetry, tol: sym_tol });
            }
            ops.push((&m + m.transpose()) * 0.5);
        }
        if n == 0 {
            return Err(FormError::DimensionMismatch { expected: 1, got: 0 });
        }
        Ok(Self { n, ops, sym_tol })
    }

    pub fn zero(n: usize, p: usize) -> Self {
        Self::new(vec![DMatrix::zeros(n, n); p], 0.0).expect("zero form is valid")
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn p(&self) -> usize {
        self.ops.len()
    }

    pub fn sym_tol(&self) -> f64 {
        self.sym_tol
    }

    pub fn ops(&self) -> &[DMatrix<f64>] {
        &self.ops
    }

    /// Frobenius norm of the whole family, `(Σₐ ‖Aᵃ‖²_F)^½`.
    ///
    /// Invariant under orthogonal changes of basis in `V` and in `W`; used as
    /// the scale for every rank decision.
    pub fn scale(&self) -> f64 {
        self.ops.iter().map(|a| a.norm_squared()).sum::<f64>().sqrt()
    }

    fn check_len(&self, v: &DVector<f64>) -> Result<(), FormError> {
        if v.len() != self.n {
            return Err(FormError::DimensionMismatch { expected: self.n, got: v.len() });
        }
        Ok(())
    }

    /// `β(x, y)` as a vector of `W`.
    pub fn evaluate(&self, x: &DVector<f64>, y: &DVector<f64>) -> Result<DVector<f64>, FormError> {
        self.check_len(x)?;
        self.check_len(y)?;
        Ok(self.eval(x, y))
    }

    pub(crate) fn eval(&self, x: &DVector<f64>, y: &DVector<f64>) -> DVector<f64> {
        DVector::from_iterator(self.p(), self.ops.iter().map(|a| x.dot(&(a * y))))
    }

    /// `R(x,y,z,w) = ⟨β(x,w), β(y,z)⟩ − ⟨β(x,z), β(y,w)⟩`.
    pub fn gauss_tensor(
        &self,
        x: &DVector<f64>,
        y: &DVector<f64>,
        z: &DVector<f64>,
        w: &DVector<f64>,
    ) -> Result<f64, FormError> {
        for v in [x, y, z, w] {
            self.check_len(v)?;
        }
        Ok(self.eval(x, w).dot(&self.eval(y, z)) - self.eval(x, z).dot(&self.eval(y, w)))
    }

    /// Shape operator `A_u = Σₐ uₐ Aᵃ` for `u ∈ W`.
    pub fn shape_operator(&self, u: &DVector<f64>) -> DMatrix<f64> {
        let mut out = DMatrix::zeros(self.n, self.n);
        for (a, op) in self.ops.iter().enumerate() {
            if u[a] != 0.0 {
                out += op * u[a];
            }
        }
        out
    }

    /// The shape operators of the columns of `frame` stacked vertically.
    ///
    /// The kernel of the stacked matrix is the set of `x` with
    /// `π_U β(x, ·) = 0` for `U` the span of the frame.
    pub fn stacked(&self, frame: &DMatrix<f64>) -> DMatrix<f64> {
        let s = frame.ncols();
        let mut out = DMatrix::zeros(s * self.n, self.n);
        for j in 0..s {
            let a = self.shape_operator(&frame.column(j).into_owned());
            out.view_mut((j * self.n, 0), (self.n, self.n)).copy_from(&a);
        }
        out
    }

    /// The form `(x, y) ↦ β(Qᵀx, Qᵀy)`, i.e. every operator conjugated to `Q A Qᵀ`.
    pub fn conjugate(&self, q: &DMatrix<f64>) -> Self {
        let ops = self.ops.iter().map(|a| q * a * q.transpose()).collect();
        Self { n: self.n, ops, sym_tol: self.sym_tol }
    }

    /// The form `O β` for an orthogonal `p × p` matrix `O` acting on `W`.
    pub fn rotate_values(&self, o: &DMatrix<f64>) -> Self {
        let p = self.p();
        let ops = (0..p)
            .map(|a| {
                let mut m = DMatrix::zeros(self.n, self.n);
                for b in 0..p {
                    m += &self.ops[b] * o[(a, b)];
                }
                m
            })
            .collect();
        Self { n: self.n, ops, sym_tol: self.sym_tol }
    }

    /// Matrix of `β` restricted to the columns of `basis`: entry `(i, j)` of
    /// operator `a` is `⟨β(bᵢ, bⱼ), eₐ⟩`.
    pub fn in_basis(&self, basis: &DMatrix<f64>) -> Self {
        let ops = self.ops.iter().map(|a| basis.transpose() * a * basis).collect();
        Self { n: basis.ncols(), ops, sym_tol: self.sym_tol }
    }

    /// `β(bᵢ, bⱼ)` for all basis pairs, indexed `[i][j]`.
    pub fn pair_table(&self, basis: &DMatrix<f64>) -> Vec<Vec<DVector<f64>>> {
        let restricted = self.in_basis(basis);
        let m = basis.ncols();
        (0..m)
            .map(|i| {
                (0..m)
                    .map(|j| DVector::from_iterator(self.p(), restricted.ops.iter().map(|a| a[(i, j)])))
                    .collect()
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn e(n: usize, i: usize) -> DVector<f64> {
        let mut v = DVector::zeros(n);
        v[i] = 1.0;
        v
    }

    #[test]
    fn zero_matrices_give_zero_form() {
        let f = SymmetricBilinearForm::new(vec![DMatrix::zeros(4, 4); 2], 1e-12).unwrap();
        assert_eq!((f.n(), f.p()), (4, 2));
        let x = DVector::from_vec(vec![1.0, 2.0, 3.0, 4.0]);
        assert_eq!(f.evaluate(&x, &x).unwrap(), DVector::zeros(2));
    }

    #[test]
    fn symmetric_input_accepted_and_asymmetric_rejected() {
        let ok = SymmetricBilinearForm::new(vec![DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 1.0, 0.0])], 1e-12);
        assert!(ok.is_ok());
        let bad = SymmetricBilinearForm::new(vec![DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 0.0, 0.0])], 1e-12);
        assert!(matches!(bad, Err(FormError::AsymmetryExceedsTol { index: 0, .. })));
    }

    #[test]
    fn shape_checks() {
        assert_eq!(SymmetricBilinearForm::new(vec![], 0.0), Err(FormError::EmptyFamily));
        let mixed = SymmetricBilinearForm::new(vec![DMatrix::zeros(2, 2), DMatrix::zeros(3, 3)], 0.0);
        assert!(matches!(mixed, Err(FormError::DimensionMismatch { .. })));
        let f = SymmetricBilinearForm::zero(3, 1);
        assert!(matches!(
            f.evaluate(&DVector::zeros(2), &DVector::zeros(3)),
            Err(FormError::DimensionMismatch { expected: 3, got: 2 })
        ));
    }

    #[test]
    fn evaluate_examples() {
        let umbilic = SymmetricBilinearForm::new(vec![DMatrix::identity(3, 3)], 0.0).unwrap();
        assert_eq!(umbilic.evaluate(&e(3, 0), &e(3, 0)).unwrap()[0], 1.0);
        let d = SymmetricBilinearForm::new(
            vec![DMatrix::from_diagonal(&DVector::from_vec(vec![1.0, -1.0]))],
            0.0,
        )
        .unwrap();
        assert_eq!(d.evaluate(&e(2, 0), &e(2, 1)).unwrap()[0], 0.0);
    }

    #[test]
    fn gauss_tensor_examples() {
        let umbilic = SymmetricBilinearForm::new(vec![DMatrix::identity(3, 3)], 0.0).unwrap();
        let r = umbilic.gauss_tensor(&e(3, 0), &e(3, 1), &e(3, 1), &e(3, 0)).unwrap();
        assert_eq!(r, 1.0);
        let zero = SymmetricBilinearForm::zero(3, 2);
        assert_eq!(zero.gauss_tensor(&e(3, 0), &e(3, 1), &e(3, 1), &e(3, 0)).unwrap(), 0.0);
    }

    #[test]
    fn gauss_tensor_matches_hand_combination() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let ops = (0..3).map(|_| crate::linalg::gaussian_symmetric(5, &mut rng)).collect();
        let f = SymmetricBilinearForm::new(ops, 1e-12).unwrap();
        let v: Vec<_> = (0..4).map(|_| crate::linalg::gaussian_vector(5, &mut rng)).collect();
        // oracle: two independent evaluations combined by the defining formula
        let b = |x: &DVector<f64>, y: &DVector<f64>| {
            let mut out = DVector::zeros(3);
            for a in 0..3 {
                let mut acc = 0.0;
                for i in 0..5 {
                    for j in 0..5 {
                        acc += x[i] * f.ops()[a][(i, j)] * y[j];
                    }
                }
                out[a] = acc;
            }
            out
        };
        let expected = b(&v[0], &v[3]).dot(&b(&v[1], &v[2])) - b(&v[0], &v[2]).dot(&b(&v[1], &v[3]));
        let got = f.gauss_tensor(&v[0], &v[1], &v[2], &v[3]).unwrap();
        assert!((expected - got).abs() < 1e-10 * (1.0 + expected.abs()));
    }

    #[test]
    fn lorentz_pairing_has_one_minus_sign() {
        let l = InnerSpace::lorentzian(3);
        let x = DVector::from_vec(vec![2.0, 1.0, 1.0]);
        assert_eq!(l.norm_sq(&x), -2.0);
        assert_eq!(InnerSpace::euclidean(3).norm_sq(&x), 6.0);
    }
}
