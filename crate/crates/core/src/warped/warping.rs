//! Warping functions on the base factor.

use std::fmt;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::WarpedError;

/// Central-difference step for gradients without oracles, and for Hessians
/// from a gradient oracle.
pub const WARPING_FD_STEP: f64 = 1e-5;
/// Step of second differences of the value when there is no gradient oracle.
pub const WARPING_HESSIAN_STEP: f64 = 1e-4;

pub type ScalarFn = Arc<dyn Fn(&DVector<f64>) -> f64 + Send + Sync>;
pub type GradientFn = Arc<dyn Fn(&DVector<f64>) -> DVector<f64> + Send + Sync>;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Monomial {
    pub coef: f64,
    pub powers: Vec<u32>,
}

/// A positive function `ρ` of the base chart coordinates.
#[derive(Clone)]
pub enum Warping {
    /// `a + ⟨b, x⟩`.
    Affine { a: f64, b: DVector<f64> },
    /// `a·exp⟨b, x⟩ + c`.
    Exponential { a: f64, b: DVector<f64>, c: f64 },
    /// `Σ coef·Πxᵢ^powersᵢ`.
    Polynomial { dim: usize, terms: Vec<Monomial> },
    /// Evaluator with an optional gradient oracle.
    Custom { dim: usize, f: ScalarFn, grad: Option<GradientFn> },
}

impl fmt::Debug for Warping {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Affine { a, b } => write!(f, "Affine({a}, {:?})", b.as_slice()),
            Self::Exponential { a, b, c } => write!(f, "Exponential({a}, {:?}, {c})", b.as_slice()),
            Self::Polynomial { terms, .. } => write!(f, "Polynomial({terms:?})"),
            Self::Custom { grad, .. } => write!(f, "Custom(gradient oracle: {})", grad.is_some()),
        }
    }
}

impl Warping {
    pub fn constant(dim: usize, value: f64) -> Self {
        Self::Affine { a: value, b: DVector::zeros(dim) }
    }

    pub fn custom(dim: usize, f: impl Fn(&DVector<f64>) -> f64 + Send + Sync + 'static) -> Self {
        Self::Custom { dim, f: Arc::new(f), grad: None }
    }

    pub fn custom_with_gradient(
        dim: usize,
        f: impl Fn(&DVector<f64>) -> f64 + Send + Sync + 'static,
        grad: impl Fn(&DVector<f64>) -> DVector<f64> + Send + Sync + 'static,
    ) -> Self {
        Self::Custom { dim, f: Arc::new(f), grad: Some(Arc::new(grad)) }
    }

    /// Number of base coordinates the function reads.
    pub fn dim(&self) -> usize {
        match self {
            Self::Affine { b, .. } | Self::Exponential { b, .. } => b.len(),
            Self::Polynomial { dim, .. } | Self::Custom { dim, .. } => *dim,
        }
    }

    /// `λ·ρ`.
    pub fn scaled(&self, lambda: f64) -> Self {
        match self {
            Self::Affine { a, b } => Self::Affine { a: a * lambda, b: b * lambda },
            Self::Exponential { a, b, c } => Self::Exponential { a: a * lambda, b: b.clone(), c: c * lambda },
            Self::Polynomial { dim, terms } => Self::Polynomial {
                dim: *dim,
                terms: terms.iter().map(|t| Monomial { coef: t.coef * lambda, powers: t.powers.clone() }).collect(),
            },
            Self::Custom { dim, f, grad } => {
                let (f, grad) = (f.clone(), grad.clone());
                Self::Custom {
                    dim: *dim,
                    f: Arc::new(move |x| lambda * f(x)),
                    grad: grad.map(|g| Arc::new(move |x: &DVector<f64>| g(x) * lambda) as GradientFn),
                }
            }
        }
    }

    pub fn value(&self, x: &DVector<f64>) -> f64 {
        match self {
            Self::Affine { a, b } => a + b.dot(x),
            Self::Exponential { a, b, c } => a * b.dot(x).exp() + c,
            Self::Polynomial { terms, .. } => terms.iter().map(|t| t.coef * pow_product(x, &t.powers, None)).sum(),
            Self::Custom { f, .. } => f(x),
        }
    }

    pub fn gradient(&self, x: &DVector<f64>) -> DVector<f64> {
        let d = x.len();
        match self {
            Self::Affine { b, .. } => b.clone(),
            Self::Exponential { a, b, .. } => b * (a * b.dot(x).exp()),
            Self::Polynomial { terms, .. } => DVector::from_fn(d, |i, _| {
                terms.iter().map(|t| t.coef * derivative_factor(&t.powers, i) * pow_product(x, &t.powers, Some(i))).sum()
            }),
            Self::Custom { f, grad, .. } => match grad {
                Some(g) => g(x),
                None => DVector::from_fn(d, |i, _| {
                    let (mut xp, mut xm) = (x.clone(), x.clone());
                    xp[i] += WARPING_FD_STEP;
                    xm[i] -= WARPING_FD_STEP;
                    (f(&xp) - f(&xm)) / (2.0 * WARPING_FD_STEP)
                }),
            },
        }
    }

    pub fn hessian(&self, x: &DVector<f64>) -> DMatrix<f64> {
        let d = x.len();
        match self {
            Self::Affine { .. } => DMatrix::zeros(d, d),
            Self::Exponential { a, b, .. } => b * b.transpose() * (a * b.dot(x).exp()),
            Self::Polynomial { terms, .. } => DMatrix::from_fn(d, d, |i, j| {
                terms
                    .iter()
                    .map(|t| {
                        let mut powers = t.powers.clone();
                        let fi = derivative_factor(&powers, i);
                        if fi == 0.0 {
                            return 0.0;
                        }
                        powers[i] -= 1;
                        let fj = derivative_factor(&powers, j);
                        if fj == 0.0 {
                            return 0.0;
                        }
                        powers[j] -= 1;
                        t.coef * fi * fj * pow_product(x, &powers, None)
                    })
                    .sum()
            }),
            Self::Custom { grad: Some(_), .. } => {
                let mut h = DMatrix::zeros(d, d);
                for i in 0..d {
                    let (mut xp, mut xm) = (x.clone(), x.clone());
                    xp[i] += WARPING_FD_STEP;
                    xm[i] -= WARPING_FD_STEP;
                    h.set_column(i, &((self.gradient(&xp) - self.gradient(&xm)) / (2.0 * WARPING_FD_STEP)));
                }
                (&h + h.transpose()) * 0.5
            }
            Self::Custom { f, grad: None, .. } => {
                let step = WARPING_HESSIAN_STEP;
                let shifted = |i: usize, si: f64, j: usize, sj: f64| {
                    let mut y = x.clone();
                    y[i] += si * step;
                    y[j] += sj * step;
                    f(&y)
                };
                let f0 = f(x);
                DMatrix::from_fn(d, d, |i, j| {
                    if i == j {
                        (shifted(i, 1.0, i, 0.0) - 2.0 * f0 + shifted(i, -1.0, i, 0.0)) / (step * step)
                    } else {
                        (shifted(i, 1.0, j, 1.0) - shifted(i, 1.0, j, -1.0) - shifted(i, -1.0, j, 1.0) + shifted(i, -1.0, j, -1.0))
                            / (4.0 * step * step)
                    }
                })
            }
        }
    }

    pub(crate) fn check_dim(&self, n0: usize) -> Result<(), WarpedError> {
        if let Self::Polynomial { dim, terms } = self {
            if let Some(t) = terms.iter().find(|t| t.powers.len() != *dim) {
                return Err(WarpedError::DimensionMismatch { expected: *dim, got: t.powers.len() });
            }
        }
        if self.dim() != n0 {
            return Err(WarpedError::DimensionMismatch { expected: n0, got: self.dim() });
        }
        Ok(())
    }
}

fn derivative_factor(powers: &[u32], i: usize) -> f64 {
    powers.get(i).copied().unwrap_or(0) as f64
}

/// `Πxⱼ^powersⱼ`, with the exponent of `skip` lowered by one.
fn pow_product(x: &DVector<f64>, powers: &[u32], skip: Option<usize>) -> f64 {
    let mut out = 1.0;
    for (j, &p) in powers.iter().enumerate() {
        let e = if skip == Some(j) {
            if p == 0 {
                return 0.0;
            }
            p - 1
        } else {
            p
        };
        out *= x[j].powi(e as i32);
    }
    out
}
