//! Numerical isometric immersions into space forms.
//!
//! An immersion is a chart-domain evaluator `f: U ⊂ Rⁿ → Q_c^m ⊂ R^N` with
//! optional derivative oracles. From it we build the pullback metric, an
//! orthonormal tangent frame, a deterministic normal frame and the second
//! fundamental form as a [`SymmetricBilinearForm`]. On top of that sit warped
//! compositions `Ψ ∘ (f₀ × … × f_k)`, compositions with cylinders, and the
//! decomposition pipeline that recovers a warped product structure from the
//! immersion alone.

pub mod composition;
pub mod decompose;
pub mod doc;
pub mod maps;
#[cfg(test)]
mod tests;

use std::fmt;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::forms::{nullity_profile, FormError, InnerSpace, NullityConfig, NullityReport, SymmetricBilinearForm};
use crate::linalg;
use crate::spaceforms::{SpaceForm, SpaceFormError};
use crate::warped::WarpedError;

pub use composition::{make_composition, nolker_alpha_check, NolkerCheck, OuterMap, WarpedComposition};
pub use decompose::{box_samples, decompose, factor_slice, ClaimReport, DecomposeConfig, DecompositionResult, WarpedFactorResult};
pub use doc::{ImmersionDoc, SampleSpec};
pub use maps::{FactorMap, PlaneCurve, PolyTerm, PolynomialMap};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ImmersionError {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("Jacobian has rank {rank} < {n} at the sample point")]
    RankDeficientJacobian { rank: usize, n: usize },
    #[error("the immersion has no normal directions (codimension 0)")]
    NoNormalSpace,
    #[error("point outside the chart domain: {0}")]
    OutOfDomain(String),
    #[error("factor map {factor} has target dimension {got}, representation factor has dimension {expected}")]
    FactorTargetMismatch { factor: usize, expected: usize, got: usize },
    #[error("composition domain mismatch: {0}")]
    DomainMismatch(String),
    #[error("nullity hypothesis violated at sample {point}: s = {s}, values {values:?}")]
    HypothesisViolated { s: usize, point: usize, values: Vec<usize> },
    #[error("codimension too large for the nullity hypothesis: 2p = {} >= n = {n}", 2 * .p)]
    CodimensionTooLarge { n: usize, p: usize },
    #[error("second fundamental form not adapted: mixed residual {residual:e} > {tol:e}")]
    NotAdapted { residual: f64, tol: f64 },
    #[error("not a warped product: {0}")]
    NotWarpedProduct(String),
    #[error("invalid input: {0}")]
    Invalid(String),
    #[error(transparent)]
    Form(#[from] FormError),
    #[error(transparent)]
    Warped(#[from] WarpedError),
    #[error(transparent)]
    SpaceForm(#[from] SpaceFormError),
}

/// Central-difference steps for first and second derivatives.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", default)]
pub struct FdSteps {
    pub first: f64,
    pub second: f64,
}

impl Default for FdSteps {
    fn default() -> Self {
        Self { first: 1e-4, second: 1e-3 }
    }
}

pub type Evaluator = Arc<dyn Fn(&DVector<f64>) -> Result<DVector<f64>, ImmersionError> + Send + Sync>;
pub type JacobianOracle = Arc<dyn Fn(&DVector<f64>) -> DMatrix<f64> + Send + Sync>;
/// `∂ᵢ∂ⱼf` as an `n × n` table of ambient vectors.
pub type HessianOracle = Arc<dyn Fn(&DVector<f64>) -> Vec<Vec<DVector<f64>>> + Send + Sync>;

#[derive(Clone)]
pub struct NumericalImmersion {
    n: usize,
    space: SpaceForm,
    eval: Evaluator,
    jacobian: Option<JacobianOracle>,
    hessian: Option<HessianOracle>,
    pub steps: FdSteps,
}

impl fmt::Debug for NumericalImmersion {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("NumericalImmersion")
            .field("n", &self.n)
            .field("space", &self.space)
            .field("jacobian_oracle", &self.jacobian.is_some())
            .field("hessian_oracle", &self.hessian.is_some())
            .field("steps", &self.steps)
            .finish()
    }
}

impl NumericalImmersion {
    pub fn new(
        n: usize,
        space: SpaceForm,
        f: impl Fn(&DVector<f64>) -> Result<DVector<f64>, ImmersionError> + Send + Sync + 'static,
    ) -> Self {
        Self { n, space, eval: Arc::new(f), jacobian: None, hessian: None, steps: FdSteps::default() }
    }

    /// A polynomial map into flat space with exact derivative oracles.
    pub fn from_polynomial(map: PolynomialMap) -> Self {
        let (p1, p2, p3) = (map.clone(), map.clone(), map.clone());
        Self::new(map.n, SpaceForm::new(0.0, map.m), move |x| Ok(p1.eval(x)))
            .with_jacobian(move |x| p2.jacobian(x))
            .with_hessian(move |x| p3.hessians(x))
    }

    pub fn with_jacobian(mut self, j: impl Fn(&DVector<f64>) -> DMatrix<f64> + Send + Sync + 'static) -> Self {
        self.jacobian = Some(Arc::new(j));
        self
    }

    pub fn with_hessian(mut self, h: impl Fn(&DVector<f64>) -> Vec<Vec<DVector<f64>>> + Send + Sync + 'static) -> Self {
        self.hessian = Some(Arc::new(h));
        self
    }

    pub fn with_steps(mut self, steps: FdSteps) -> Self {
        self.steps = steps;
        self
    }

    /// Drops the derivative oracles, forcing central differences.
    pub fn without_oracles(mut self) -> Self {
        self.jacobian = None;
        self.hessian = None;
        self
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn space(&self) -> SpaceForm {
        self.space
    }

    pub fn ambient(&self) -> InnerSpace {
        self.space.ambient()
    }

    pub fn has_oracles(&self) -> (bool, bool) {
        (self.jacobian.is_some(), self.hessian.is_some())
    }

    pub fn point(&self, x: &DVector<f64>) -> Result<DVector<f64>, ImmersionError> {
        if x.len() != self.n {
            return Err(ImmersionError::DimensionMismatch { expected: self.n, got: x.len() });
        }
        let y = (self.eval)(x)?;
        let dim = self.space.ambient_dim();
        if y.len() != dim {
            return Err(ImmersionError::DimensionMismatch { expected: dim, got: y.len() });
        }
        Ok(y)
    }

    pub fn jacobian(&self, x: &DVector<f64>) -> Result<DMatrix<f64>, ImmersionError> {
        if let Some(j) = &self.jacobian {
            if x.len() != self.n {
                return Err(ImmersionError::DimensionMismatch { expected: self.n, got: x.len() });
            }
            return Ok(j(x));
        }
        let h = self.steps.first;
        let mut cols = Vec::with_capacity(self.n);
        for j in 0..self.n {
            let (mut xp, mut xm) = (x.clone(), x.clone());
            xp[j] += h;
            xm[j] -= h;
            cols.push((self.point(&xp)? - self.point(&xm)?) / (2.0 * h));
        }
        Ok(DMatrix::from_columns(&cols))
    }

    pub fn second_derivatives(&self, x: &DVector<f64>) -> Result<Vec<Vec<DVector<f64>>>, ImmersionError> {
        if let Some(h) = &self.hessian {
            if x.len() != self.n {
                return Err(ImmersionError::DimensionMismatch { expected: self.n, got: x.len() });
            }
            return Ok(h(x));
        }
        self.fd_second_derivatives(x, self.steps.second)
    }

    /// Second derivatives by central differences with step `h`.
    pub fn fd_second_derivatives(&self, x: &DVector<f64>, h: f64) -> Result<Vec<Vec<DVector<f64>>>, ImmersionError> {
        let n = self.n;
        let f0 = self.point(x)?;
        let shifted = |i: usize, si: f64, j: usize, sj: f64| {
            let mut y = x.clone();
            y[i] += si * h;
            y[j] += sj * h;
            self.point(&y)
        };
        let mut out = vec![vec![DVector::zeros(f0.len()); n]; n];
        for i in 0..n {
            out[i][i] = (shifted(i, 1.0, i, 0.0)? - &f0 * 2.0 + shifted(i, -1.0, i, 0.0)?) / (h * h);
            for j in (i + 1)..n {
                let v = (shifted(i, 1.0, j, 1.0)? - shifted(i, 1.0, j, -1.0)? - shifted(i, -1.0, j, 1.0)?
                    + shifted(i, -1.0, j, -1.0)?)
                    / (4.0 * h * h);
                out[j][i] = v.clone();
                out[i][j] = v;
            }
        }
        Ok(out)
    }
}

/// First and second fundamental forms at one chart point.
#[derive(Debug, Clone, PartialEq)]
pub struct SecondFundamentalData {
    pub chart_point: DVector<f64>,
    pub point: DVector<f64>,
    pub jacobian: DMatrix<f64>,
    /// Pullback metric `G = Jᵀ η J` in chart coordinates.
    pub gram: DMatrix<f64>,
    /// `G^{-1/2}`: column `i` holds the chart coordinates of tangent frame vector `i`.
    pub chart_frame: DMatrix<f64>,
    /// `J G^{-1/2}`, orthonormal in the ambient pairing.
    pub tangent_frame: DMatrix<f64>,
    /// Orthonormal normal frame; excludes the position direction when `c ≠ 0`.
    pub normal_frame: DMatrix<f64>,
    /// `α` in the tangent and normal frames.
    pub form: SymmetricBilinearForm,
    /// `⟨∂ᵢ∂ⱼf, ξₐ⟩` in chart coordinates, one matrix per normal vector.
    pub chart_ops: Vec<DMatrix<f64>>,
}

impl SecondFundamentalData {
    /// `α(u, v)` as an ambient vector, for chart vectors `u, v`.
    pub fn alpha_vector(&self, u: &DVector<f64>, v: &DVector<f64>) -> DVector<f64> {
        let mut out = DVector::zeros(self.point.len());
        for (a, h) in self.chart_ops.iter().enumerate() {
            out += self.normal_frame.column(a) * (u.dot(&(h * v)));
        }
        out
    }

    /// Largest `|α(∂ᵤ, ∂ᵥ)| / (|∂ᵤ||∂ᵥ|)` over chart coordinates `u`, `v` in
    /// different groups.
    pub fn mixed_residual(&self, groups: &[Vec<usize>]) -> f64 {
        let mut out: f64 = 0.0;
        for (gi, a) in groups.iter().enumerate() {
            for b in &groups[gi + 1..] {
                for &u in a {
                    for &v in b {
                        let scale = (self.gram[(u, u)] * self.gram[(v, v)]).sqrt();
                        let norm = self.chart_ops.iter().map(|h| h[(u, v)].powi(2)).sum::<f64>().sqrt();
                        out = out.max(norm / scale);
                    }
                }
            }
        }
        out
    }
}

/// Normal projection `v ↦ v − J G⁻¹ Jᵀηv − c⟨v, p⟩p`.
fn normal_projector(space: &SpaceForm, point: &DVector<f64>, jac: &DMatrix<f64>, gram_inv: &DMatrix<f64>) -> DMatrix<f64> {
    let eta = space.ambient().metric();
    let dim = point.len();
    let mut proj = DMatrix::identity(dim, dim) - jac * gram_inv * jac.transpose() * &eta;
    if space.c != 0.0 {
        proj -= point * (point.transpose() * &eta) * space.c;
    }
    proj
}

/// Rank test on the Jacobian (relative threshold `1e-8`).
fn check_rank(jac: &DMatrix<f64>, n: usize) -> Result<(), ImmersionError> {
    let sv = linalg::singular_values(jac);
    let top = sv.iter().copied().fold(0.0, f64::max);
    let rank = sv.iter().filter(|&&s| s > 1e-8 * top.max(f64::MIN_POSITIVE)).count();
    if rank < n || top == 0.0 {
        return Err(ImmersionError::RankDeficientJacobian { rank: if top == 0.0 { 0 } else { rank }, n });
    }
    Ok(())
}

/// Pullback metric and second fundamental form at `x`.
pub fn fundamental_forms(f: &NumericalImmersion, x: &DVector<f64>) -> Result<(DMatrix<f64>, SecondFundamentalData), ImmersionError> {
    let n = f.n();
    let space = f.space();
    let amb = space.ambient();
    let point = f.point(x)?;
    let jac = f.jacobian(x)?;
    check_rank(&jac, n)?;
    let gram = amb.gram(&jac, &jac);
    let gram = (&gram + gram.transpose()) * 0.5;
    let chart_frame = linalg::inv_sqrt_spd(&gram).ok_or(ImmersionError::RankDeficientJacobian { rank: n - 1, n })?;
    let tangent_frame = &jac * &chart_frame;
    let mut seed: Vec<DVector<f64>> = tangent_frame.column_iter().map(|c| c.into_owned()).collect();
    if space.c != 0.0 {
        seed.push(&point * space.c.abs().sqrt());
    }
    let dim = point.len();
    let pair = |a: &DVector<f64>, b: &DVector<f64>| amb.pair(a, b);
    let normal_frame = linalg::complement_with_pairing(&DMatrix::from_columns(&seed), dim, &pair);
    let p = normal_frame.ncols();
    if p == 0 {
        return Err(ImmersionError::NoNormalSpace);
    }
    let second = f.second_derivatives(x)?;
    let chart_ops: Vec<DMatrix<f64>> = (0..p)
        .map(|a| {
            let nu = normal_frame.column(a).into_owned();
            let h = DMatrix::from_fn(n, n, |i, j| amb.pair(&second[i][j], &nu));
            (&h + h.transpose()) * 0.5
        })
        .collect();
    let ops: Vec<DMatrix<f64>> = chart_ops
        .iter()
        .map(|h| {
            let a = chart_frame.transpose() * h * &chart_frame;
            (&a + a.transpose()) * 0.5
        })
        .collect();
    let form = SymmetricBilinearForm::new(ops, 1e-12)?;
    let data = SecondFundamentalData {
        chart_point: x.clone(),
        point,
        jacobian: jac,
        gram: gram.clone(),
        chart_frame,
        tangent_frame,
        normal_frame,
        form,
        chart_ops,
    };
    Ok((gram, data))
}

/// Largest change of the normal part of the second derivatives between the
/// configured step and half of it.
pub fn richardson_delta(f: &NumericalImmersion, x: &DVector<f64>) -> Result<f64, ImmersionError> {
    let (_, data) = fundamental_forms(f, x)?;
    let h = f.steps.second;
    let a = f.fd_second_derivatives(x, h)?;
    let b = f.fd_second_derivatives(x, 0.5 * h)?;
    let amb = f.ambient();
    let mut out: f64 = 0.0;
    for i in 0..f.n() {
        for j in 0..f.n() {
            let d = &a[i][j] - &b[i][j];
            for nu in data.normal_frame.column_iter() {
                out = out.max(amb.pair(&d, &nu.into_owned()).abs());
            }
        }
    }
    Ok(out)
}

/// s-nullities of `α` at `x`.
pub fn pointwise_nullities(f: &NumericalImmersion, x: &DVector<f64>, config: &NullityConfig) -> Result<NullityReport, ImmersionError> {
    let (_, data) = fundamental_forms(f, x)?;
    Ok(nullity_profile(&data.form, config)?)
}

/// Codazzi defect `max |(∇⊥_{∂ₖ}α)(∂ᵢ,∂ⱼ) − (∇⊥_{∂ᵢ}α)(∂ₖ,∂ⱼ)|` at `x`,
/// with the outer derivative taken by central differences of step `h`.
pub fn codazzi_residual(f: &NumericalImmersion, x: &DVector<f64>, h: f64) -> Result<f64, ImmersionError> {
    let n = f.n();
    let space = f.space();
    let amb = space.ambient();
    // normal part of the second derivatives, the tangential Christoffel part
    // and the normal projector at one point
    type Local = (Vec<Vec<DVector<f64>>>, Vec<Vec<DVector<f64>>>, DMatrix<f64>);
    let local = |y: &DVector<f64>| -> Result<Local, ImmersionError> {
        let point = f.point(y)?;
        let jac = f.jacobian(y)?;
        check_rank(&jac, n)?;
        let gram = amb.gram(&jac, &jac);
        let gram_inv = gram.clone().try_inverse().ok_or(ImmersionError::RankDeficientJacobian { rank: n - 1, n })?;
        let proj = normal_projector(&space, &point, &jac, &gram_inv);
        let second = f.second_derivatives(y)?;
        let eta = amb.metric();
        let alpha: Vec<Vec<DVector<f64>>> = second.iter().map(|row| row.iter().map(|v| &proj * v).collect()).collect();
        // Γ^l_{ij} = G^{lm}⟨∂ᵢ∂ⱼf, ∂ₘf⟩
        let gamma: Vec<Vec<DVector<f64>>> = second
            .iter()
            .map(|row| row.iter().map(|v| &gram_inv * (jac.transpose() * (&eta * v))).collect())
            .collect();
        Ok((alpha, gamma, proj))
    };
    let (alpha, gamma, proj) = local(x)?;
    let mut derivs: Vec<Vec<Vec<DVector<f64>>>> = Vec::with_capacity(n);
    for k in 0..n {
        let (mut xp, mut xm) = (x.clone(), x.clone());
        xp[k] += h;
        xm[k] -= h;
        let (ap, _, _) = local(&xp)?;
        let (am, _, _) = local(&xm)?;
        let dk: Vec<Vec<DVector<f64>>> = (0..n)
            .map(|i| (0..n).map(|j| &proj * ((&ap[i][j] - &am[i][j]) / (2.0 * h))).collect())
            .collect();
        derivs.push(dk);
    }
    // (∇⊥_k α)(i, j) = (∂ₖ α_ij)^⊥ − Γ^l_{ki} α_lj − Γ^l_{kj} α_il
    let covariant = |k: usize, i: usize, j: usize| {
        let mut v = derivs[k][i][j].clone();
        for l in 0..n {
            v -= &alpha[l][j] * gamma[k][i][l];
            v -= &alpha[i][l] * gamma[k][j][l];
        }
        v
    };
    let mut out: f64 = 0.0;
    for k in 0..n {
        for i in 0..n {
            if i == k {
                continue;
            }
            for j in 0..n {
                let d = covariant(k, i, j) - covariant(i, k, j);
                out = out.max(amb.norm_sq(&d).abs().sqrt());
            }
        }
    }
    Ok(out)
}

/// Built-in immersion families.
pub mod builtin {
    use super::*;

    /// `x ↦ Ax + b` into `Rᵐ`.
    pub fn affine(a: &DMatrix<f64>, b: &DVector<f64>) -> NumericalImmersion {
        NumericalImmersion::from_polynomial(PolynomialMap::linear(a, b))
    }

    /// Graph `x ↦ (x, √(r² − |x|²))` of the upper hemisphere of radius `r`
    /// in `Rⁿ⁺¹`, with exact derivatives.
    pub fn sphere_chart(n: usize, r: f64) -> NumericalImmersion {
        let height = move |x: &DVector<f64>| -> Result<f64, ImmersionError> {
            let s = r * r - x.norm_squared();
            if s <= 0.0 {
                return Err(ImmersionError::OutOfDomain(format!("|x| = {} >= radius {r}", x.norm())));
            }
            Ok(s.sqrt())
        };
        let eval = move |x: &DVector<f64>| -> Result<DVector<f64>, ImmersionError> {
            let mut y = x.clone().resize_vertically(n + 1, 0.0);
            y[n] = height(x)?;
            Ok(y)
        };
        let jac = move |x: &DVector<f64>| {
            let w = height(x).unwrap_or(f64::NAN);
            let mut j = DMatrix::identity(n + 1, n);
            for i in 0..n {
                j[(n, i)] = -x[i] / w;
            }
            j
        };
        let hess = move |x: &DVector<f64>| {
            let w = height(x).unwrap_or(f64::NAN);
            let mut out = vec![vec![DVector::zeros(n + 1); n]; n];
            for i in 0..n {
                for j in 0..n {
                    let delta = if i == j { 1.0 } else { 0.0 };
                    out[i][j][n] = -delta / w - x[i] * x[j] / (w * w * w);
                }
            }
            out
        };
        NumericalImmersion::new(n, SpaceForm::new(0.0, n + 1), eval).with_jacobian(jac).with_hessian(hess)
    }

    /// The saddle `(x, y) ↦ (x, y, xy)`.
    pub fn saddle() -> NumericalImmersion {
        let height = PolynomialMap::new(2, 1, vec![PolyTerm { powers: vec![1, 1], coef: vec![1.0] }]).expect("valid");
        NumericalImmersion::from_polynomial(PolynomialMap::graph(&height))
    }

    /// `Rⁿ` as the totally geodesic chart `x ↦ (x, 0)` of the unit sphere
    /// `Sⁿ ⊂ Rⁿ⁺¹` through its pole: `x ↦ (sin|x| x/|x|, cos|x|)` in `Rⁿ⁺²`
    /// after a zero is appended, so the immersion has codimension 1 in `Sⁿ⁺¹`.
    pub fn great_sphere(n: usize) -> NumericalImmersion {
        NumericalImmersion::new(n, SpaceForm::new(1.0, n + 1), move |x| {
            let t = x.norm();
            let mut y = DVector::zeros(n + 2);
            let scale = if t == 0.0 { 1.0 } else { t.sin() / t };
            y.rows_mut(0, n).copy_from(&(x * scale));
            y[n] = t.cos();
            Ok(y)
        })
    }
}
