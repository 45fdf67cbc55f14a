//! Space forms `Q_c^m` as quadrics and warped product representations.
//!
//! For `c = 0` the model is `Rᵐ`; for `c ≠ 0` it is `{⟨p, p⟩ = 1/c}` in
//! `R^{m+1}`, with the Lorentz pairing `−x₀y₀ + Σ xᵢyᵢ` and the upper sheet
//! (`p₀ > 0`) when `c < 0`.
//!
//! A warped product representation is given by a base point `q`, orthonormal
//! frames `T₀, …, T_k` of `T_q Q_c` and mean curvature vectors `z₁, …, z_k`
//! with `⟨zᵢ, zⱼ⟩ = −c` for `i ≠ j`. The factor `Mᵢ` through `q` is the
//! umbilical submanifold with tangent space `Tᵢ` and mean curvature vector
//! `zᵢ` (curvature `cᵢ = c + |zᵢ|²`), and `M₀` is totally geodesic. The map
//!
//! ```text
//! Ψ(p₀, …, p_k) = p₀ + Σ σᵢ(p₀)(pᵢ − q),
//! σᵢ(p) = 1 + ⟨p − q, aᵢ⟩ (c = 0),   σᵢ(p) = ⟨p, aᵢ⟩ (c ≠ 0),   aᵢ = c q − zᵢ,
//! ```
//!
//! is an isometry from the warped product `M₀ ×_σ M₁ × … × M_k` onto an open
//! subset of `Q_c`.
//!
//! Factors are parametrized by exponential charts at `q`:
//! `pᵢ(v) = q + S_κ(|v|) v/|v| + D_κ(|v|) Hᵢ` with `v ∈ Tᵢ`, `κ = cᵢ`,
//! `Hᵢ = zᵢ − c q` the mean curvature vector in the flat ambient space,
//! `S_κ` the generalized sine and `D_κ = (1 − C_κ)/κ`.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::forms::{InnerSpace, Signature};
use crate::linalg;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SpaceFormError {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("base point is off the quadric: residual {residual:e}")]
    BasePointOffQuadric { residual: f64 },
    #[error("umbilical constraint violated for factors ({i}, {j}): <z_i, z_j> = {value}, expected {expected}")]
    UmbilicalConstraintViolated { i: usize, j: usize, value: f64, expected: f64 },
    #[error("mean curvature vector z_{i} is not tangent to the space form at q: <q, z_{i}> = {value}")]
    NotTangent { i: usize, value: f64 },
    #[error("warping function sigma_{i} = {value} is not positive")]
    NonpositiveWarping { i: usize, value: f64 },
    #[error("result is off the quadric: residual {residual:e}")]
    ResultOffQuadric { residual: f64 },
    #[error("frames are not orthonormal tangent frames at q: defect {defect:e}")]
    BadFrames { defect: f64 },
    #[error("mean curvature vectors span {rank} dimensions but the first factor has dimension {dim}")]
    FirstFactorTooSmall { rank: usize, dim: usize },
    #[error("finite-difference step {h} leaves the chart domain")]
    StepTooLargeForDomain { h: f64 },
    #[error("the fixed-base embedding needs c != 0")]
    FlatAmbient,
}

/// `Q_c^m` as a quadric (or `Rᵐ`).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpaceForm {
    pub c: f64,
    pub m: usize,
}

impl SpaceForm {
    pub fn new(c: f64, m: usize) -> Self {
        Self { c, m }
    }

    pub fn ambient(&self) -> InnerSpace {
        if self.c == 0.0 {
            InnerSpace::euclidean(self.m)
        } else if self.c > 0.0 {
            InnerSpace::euclidean(self.m + 1)
        } else {
            InnerSpace::lorentzian(self.m + 1)
        }
    }

    pub fn ambient_dim(&self) -> usize {
        self.ambient().dim
    }

    /// `|⟨p, p⟩ − 1/c|`, plus a unit penalty for the lower sheet; zero for `c = 0`.
    pub fn quadric_residual(&self, p: &DVector<f64>) -> f64 {
        if self.c == 0.0 {
            return 0.0;
        }
        let r = (self.ambient().norm_sq(p) - 1.0 / self.c).abs();
        if self.c < 0.0 && p[0] <= 0.0 {
            r + 1.0
        } else {
            r
        }
    }

    /// Default base point: the origin, `e_m/√c`, or `e₀/√(−c)`.
    pub fn standard_point(&self) -> DVector<f64> {
        let mut q = DVector::zeros(self.ambient_dim());
        if self.c > 0.0 {
            q[self.m] = 1.0 / self.c.sqrt();
        } else if self.c < 0.0 {
            q[0] = 1.0 / (-self.c).sqrt();
        }
        q
    }

    /// Orthonormal basis of `T_p Q_c`.
    pub fn tangent_frame(&self, p: &DVector<f64>) -> DMatrix<f64> {
        let amb = self.ambient();
        if self.c == 0.0 {
            return DMatrix::identity(self.m, self.m);
        }
        let unit = p * self.c.abs().sqrt();
        let pair = move |x: &DVector<f64>, y: &DVector<f64>| amb.pair(x, y);
        linalg::complement_with_pairing(&DMatrix::from_columns(&[unit]), amb.dim, &pair)
    }
}

/// Generalized sine `S_κ(t)`, cosine `C_κ(t)` and `D_κ(t) = (1 − C_κ(t))/κ`.
pub fn trig(kappa: f64, t: f64) -> (f64, f64, f64) {
    if kappa.abs() < 1e-12 {
        // series to second order in κ
        let t2 = t * t;
        let s = t - kappa * t * t2 / 6.0 + kappa * kappa * t2 * t2 * t / 120.0;
        let c = 1.0 - kappa * t2 / 2.0 + kappa * kappa * t2 * t2 / 24.0;
        let d = t2 / 2.0 - kappa * t2 * t2 / 24.0 + kappa * kappa * t2 * t2 * t2 / 720.0;
        (s, c, d)
    } else if kappa > 0.0 {
        let r = kappa.sqrt();
        let (s, c) = (r * t).sin_cos();
        (s / r, c, 2.0 * (0.5 * r * t).sin().powi(2) / kappa)
    } else {
        let r = (-kappa).sqrt();
        let (s, c) = ((r * t).sinh(), (r * t).cosh());
        (s / r, c, -2.0 * (0.5 * r * t).sinh().powi(2) / kappa)
    }
}

/// Exponential chart of an umbilical submanifold through `q`.
#[derive(Debug, Clone, PartialEq)]
pub struct FactorChart {
    pub q: DVector<f64>,
    /// Orthonormal tangent frame at `q`.
    pub frame: DMatrix<f64>,
    /// Mean curvature vector in the flat ambient space.
    pub h: DVector<f64>,
    /// Sectional curvature of the factor.
    pub kappa: f64,
}

impl FactorChart {
    pub fn dim(&self) -> usize {
        self.frame.ncols()
    }

    pub fn point(&self, v: &DVector<f64>) -> DVector<f64> {
        let t = v.norm();
        if t == 0.0 {
            return self.q.clone();
        }
        let (s, _, d) = trig(self.kappa, t);
        &self.q + &self.frame * (v * (s / t)) + &self.h * d
    }

    /// Metric of the chart, `v̂v̂ᵀ + (S_κ(|v|)/|v|)² (I − v̂v̂ᵀ)`.
    pub fn metric(&self, v: &DVector<f64>) -> DMatrix<f64> {
        let m = v.len();
        let t = v.norm();
        let id = DMatrix::identity(m, m);
        if t == 0.0 {
            return id;
        }
        let (s, _, _) = trig(self.kappa, t);
        let u = v / t;
        let radial = &u * u.transpose();
        &radial + (id - &radial) * (s / t).powi(2)
    }
}

/// Validated warped product representation of `Q_c^m`.
#[derive(Debug, Clone, PartialEq)]
pub struct WarpedRepresentation {
    pub form: SpaceForm,
    pub q: DVector<f64>,
    /// `T₀, …, T_k`.
    pub frames: Vec<DMatrix<f64>>,
    /// `z₁, …, z_k`.
    pub z: Vec<DVector<f64>>,
    /// `a₁, …, a_k`.
    pub a: Vec<DVector<f64>>,
}

impl WarpedRepresentation {
    /// Builds a representation with frames derived from the data: `T₀`
    /// starts with an orthonormal basis of `span{zᵢ}` and is completed from
    /// the tangent space in a fixed order; `T₁, T₂, …` take the remaining
    /// tangent directions in that order.
    pub fn new(c: f64, q: DVector<f64>, dims: &[usize], z: Vec<DVector<f64>>, tol: f64) -> Result<Self, SpaceFormError> {
        let m: usize = dims.iter().sum();
        let form = SpaceForm::new(c, m);
        let amb = form.ambient();
        if q.len() != amb.dim {
            return Err(SpaceFormError::DimensionMismatch { expected: amb.dim, got: q.len() });
        }
        if z.len() + 1 != dims.len() {
            return Err(SpaceFormError::DimensionMismatch { expected: dims.len() - 1, got: z.len() });
        }
        let pair = move |x: &DVector<f64>, y: &DVector<f64>| amb.pair(x, y);
        let mut known: Vec<DVector<f64>> = Vec::new();
        if c != 0.0 {
            known.push(&q * c.abs().sqrt());
        }
        // orthonormal basis of span{zᵢ} (spacelike once tangent)
        let mut z_basis: Vec<DVector<f64>> = Vec::new();
        for zi in &z {
            let mut r = zi.clone();
            for _ in 0..2 {
                for b in known.iter().chain(&z_basis) {
                    let s = pair(b, b);
                    r -= b * (pair(&r, b) / s);
                }
            }
            let nr = pair(&r, &r);
            if nr > tol.max(1e-12) * (1.0 + pair(zi, zi).abs()) {
                z_basis.push(r / nr.sqrt());
            }
        }
        if z_basis.len() > dims[0] {
            return Err(SpaceFormError::FirstFactorTooSmall { rank: z_basis.len(), dim: dims[0] });
        }
        let mut seed_cols = known.clone();
        seed_cols.extend(z_basis.iter().cloned());
        let seed = if seed_cols.is_empty() { DMatrix::zeros(amb.dim, 0) } else { DMatrix::from_columns(&seed_cols) };
        let rest = linalg::complement_with_pairing(&seed, amb.dim, &pair);
        let mut pool: Vec<DVector<f64>> = z_basis;
        pool.extend(rest.column_iter().map(|c| c.into_owned()));
        let mut frames = Vec::with_capacity(dims.len());
        let mut at = 0;
        for &d in dims {
            frames.push(DMatrix::from_fn(amb.dim, d, |i, j| pool[at + j][i]));
            at += d;
        }
        Self::with_frames(c, q, frames, z, tol)
    }

    /// Builds a representation from explicit frames, validating all data.
    pub fn with_frames(
        c: f64,
        q: DVector<f64>,
        frames: Vec<DMatrix<f64>>,
        z: Vec<DVector<f64>>,
        tol: f64,
    ) -> Result<Self, SpaceFormError> {
        let m: usize = frames.iter().map(|f| f.ncols()).sum();
        let form = SpaceForm::new(c, m);
        let amb = form.ambient();
        if q.len() != amb.dim {
            return Err(SpaceFormError::DimensionMismatch { expected: amb.dim, got: q.len() });
        }
        if frames.is_empty() || z.len() + 1 != frames.len() {
            return Err(SpaceFormError::DimensionMismatch { expected: frames.len().saturating_sub(1), got: z.len() });
        }
        let residual = form.quadric_residual(&q);
        if residual > tol {
            return Err(SpaceFormError::BasePointOffQuadric { residual });
        }
        for (i, zi) in z.iter().enumerate() {
            if zi.len() != amb.dim {
                return Err(SpaceFormError::DimensionMismatch { expected: amb.dim, got: zi.len() });
            }
            if c != 0.0 {
                let value = amb.pair(&q, zi);
                if value.abs() > tol {
                    return Err(SpaceFormError::NotTangent { i: i + 1, value });
                }
            }
        }
        for i in 0..z.len() {
            for j in (i + 1)..z.len() {
                let value = amb.pair(&z[i], &z[j]);
                if (value + c).abs() > tol {
                    return Err(SpaceFormError::UmbilicalConstraintViolated { i: i + 1, j: j + 1, value, expected: -c });
                }
            }
        }
        // frames: orthonormal, tangent, and zᵢ ⊥ Tⱼ for j ≥ 1
        let refs: Vec<&DMatrix<f64>> = frames.iter().collect();
        let all = linalg::hcat(&refs, amb.dim);
        let mut defect = (amb.gram(&all, &all) - DMatrix::<f64>::identity(m, m)).amax();
        if c != 0.0 {
            defect = defect.max(((amb.metric() * &q).transpose() * &all).amax());
        }
        for zi in &z {
            for f in frames.iter().skip(1) {
                defect = defect.max(((amb.metric() * zi).transpose() * f).amax());
            }
        }
        if defect > tol {
            return Err(SpaceFormError::BadFrames { defect });
        }
        let a = z.iter().map(|zi| &q * c - zi).collect();
        Ok(Self { form, q, frames, z, a })
    }

    pub fn c(&self) -> f64 {
        self.form.c
    }

    pub fn k(&self) -> usize {
        self.z.len()
    }

    pub fn dims(&self) -> Vec<usize> {
        self.frames.iter().map(|f| f.ncols()).collect()
    }

    pub fn ambient(&self) -> InnerSpace {
        self.form.ambient()
    }

    /// Curvature `cᵢ = c + |zᵢ|²` of factor `i ≥ 1`; `c` for `i = 0`.
    pub fn factor_curvature(&self, i: usize) -> f64 {
        if i == 0 {
            self.c()
        } else {
            self.c() + self.ambient().norm_sq(&self.z[i - 1])
        }
    }

    /// Exponential chart of factor `i` at `q`.
    pub fn factor_chart(&self, i: usize) -> FactorChart {
        let h = if i == 0 { -&self.q * self.c() } else { &self.z[i - 1] - &self.q * self.c() };
        FactorChart { q: self.q.clone(), frame: self.frames[i].clone(), h, kappa: self.factor_curvature(i) }
    }

    /// `σᵢ(p₀)` for `i ≥ 1` without the positivity check.
    pub fn sigma_raw(&self, i: usize, p0: &DVector<f64>) -> f64 {
        let amb = self.ambient();
        let a = &self.a[i - 1];
        if self.c() == 0.0 {
            1.0 + amb.pair(&(p0 - &self.q), a)
        } else {
            amb.pair(p0, a)
        }
    }

    pub fn sigma(&self, i: usize, p0: &DVector<f64>) -> Result<f64, SpaceFormError> {
        let value = self.sigma_raw(i, p0);
        if value <= 0.0 {
            return Err(SpaceFormError::NonpositiveWarping { i, value });
        }
        Ok(value)
    }

    /// Ambient gradient of `σᵢ` along `Q_c` (tangential part of `aᵢ`).
    pub fn sigma_gradient(&self, i: usize, p0: &DVector<f64>) -> DVector<f64> {
        let a = &self.a[i - 1];
        if self.c() == 0.0 {
            return a.clone();
        }
        let amb = self.ambient();
        // remove the component along the position: ⟨p, p⟩ = 1/c
        a - p0 * (amb.pair(p0, a) * self.c())
    }

    pub fn psi(&self, p0: &DVector<f64>, factors: &[DVector<f64>]) -> Result<DVector<f64>, SpaceFormError> {
        if factors.len() != self.k() {
            return Err(SpaceFormError::DimensionMismatch { expected: self.k(), got: factors.len() });
        }
        let mut out = p0.clone();
        for (i, pi) in factors.iter().enumerate() {
            let s = self.sigma(i + 1, p0)?;
            out += (pi - &self.q) * s;
        }
        let residual = self.form.quadric_residual(&out);
        if residual > 1e-8 * (1.0 + out.norm_squared()) {
            return Err(SpaceFormError::ResultOffQuadric { residual });
        }
        Ok(out)
    }

    /// `F(p₁, …, p_k) = Ψ(p̄, p₁, …, p_k)`.
    pub fn fixed_base_embedding(&self, p_bar: &DVector<f64>, factors: &[DVector<f64>]) -> Result<DVector<f64>, SpaceFormError> {
        if self.c() == 0.0 {
            return Err(SpaceFormError::FlatAmbient);
        }
        self.psi(p_bar, factors)
    }

    /// Splits product chart coordinates into per-factor vectors.
    pub fn split_coords(&self, x: &DVector<f64>) -> Vec<DVector<f64>> {
        let mut at = 0;
        self.dims()
            .into_iter()
            .map(|d| {
                let v = x.rows(at, d).into_owned();
                at += d;
                v
            })
            .collect()
    }

    /// `Ψ` in product exponential-chart coordinates.
    pub fn psi_chart(&self, x: &DVector<f64>) -> Result<DVector<f64>, SpaceFormError> {
        let parts = self.split_coords(x);
        let p0 = self.factor_chart(0).point(&parts[0]);
        let ps: Vec<DVector<f64>> = (1..=self.k()).map(|i| self.factor_chart(i).point(&parts[i])).collect();
        self.psi(&p0, &ps)
    }

    /// Warping values `σᵢ(p₀(x₀))` at product chart coordinates.
    pub fn sigmas_chart(&self, x: &DVector<f64>) -> Result<Vec<f64>, SpaceFormError> {
        let parts = self.split_coords(x);
        let p0 = self.factor_chart(0).point(&parts[0]);
        (1..=self.k()).map(|i| self.sigma(i, &p0)).collect()
    }

    /// The expected metric `diag(g₀, σ₁² g₁, …)` at chart coordinates.
    pub fn warped_metric(&self, x: &DVector<f64>) -> Result<DMatrix<f64>, SpaceFormError> {
        let parts = self.split_coords(x);
        let sig = self.sigmas_chart(x)?;
        let m = x.len();
        let mut g = DMatrix::zeros(m, m);
        let mut at = 0;
        for (i, v) in parts.iter().enumerate() {
            let d = v.len();
            let w = if i == 0 { 1.0 } else { sig[i - 1].powi(2) };
            g.view_mut((at, at), (d, d)).copy_from(&(self.factor_chart(i).metric(v) * w));
            at += d;
        }
        Ok(g)
    }

    /// Random chart point with every `|vᵢ| ≤ radius` and every `σᵢ ≥ min_sigma`.
    pub fn sample_point<R: Rng + ?Sized>(&self, radius: f64, min_sigma: f64, rng: &mut R) -> DVector<f64> {
        let m = self.form.m;
        loop {
            let mut x = DVector::zeros(m);
            let mut at = 0;
            for d in self.dims() {
                let dir = linalg::random_unit(d, rng);
                let r = radius * rng.random::<f64>().powf(1.0 / d as f64);
                x.rows_mut(at, d).copy_from(&(dir * r));
                at += d;
            }
            if let Ok(s) = self.sigmas_chart(&x) {
                if s.iter().all(|&v| v >= min_sigma) {
                    return x;
                }
            }
        }
    }
}

/// Central-difference Jacobian of a map `Rᵐ → Rᴺ`.
pub fn fd_jacobian<F>(f: F, x: &DVector<f64>, h: f64) -> Result<DMatrix<f64>, SpaceFormError>
where
    F: Fn(&DVector<f64>) -> Result<DVector<f64>, SpaceFormError>,
{
    let m = x.len();
    let mut cols = Vec::with_capacity(m);
    for j in 0..m {
        let mut xp = x.clone();
        let mut xm = x.clone();
        xp[j] += h;
        xm[j] -= h;
        let (fp, fm) = match (f(&xp), f(&xm)) {
            (Ok(a), Ok(b)) => (a, b),
            _ => return Err(SpaceFormError::StepTooLargeForDomain { h }),
        };
        cols.push((fp - fm) / (2.0 * h));
    }
    Ok(DMatrix::from_columns(&cols))
}

/// Comparison of the pullback metric of `Ψ` with the warped metric.
#[derive(Debug, Clone, PartialEq)]
pub struct PullbackCheck {
    pub gram: DMatrix<f64>,
    pub expected: DMatrix<f64>,
    /// Largest entry of the pullback outside the diagonal blocks.
    pub off_block: f64,
    /// Largest `‖Gᵢᵢ − σᵢ² gᵢ‖_max / ‖σᵢ² gᵢ‖_max` over blocks.
    pub in_block_rel: f64,
    /// Largest change of the Gram matrix between steps `h` and `h/2`.
    pub richardson_delta: f64,
    /// `|⟨Ψ, Ψ⟩ − 1/c|` at the point.
    pub quadric_residual: f64,
}

/// Pullback of the ambient pairing under `Ψ` by central differences.
pub fn pullback_metric(rep: &WarpedRepresentation, x: &DVector<f64>, h: f64) -> Result<PullbackCheck, SpaceFormError> {
    if x.len() != rep.form.m {
        return Err(SpaceFormError::DimensionMismatch { expected: rep.form.m, got: x.len() });
    }
    let amb = rep.ambient();
    let f = |y: &DVector<f64>| rep.psi_chart(y);
    let point = f(x)?;
    let jac = fd_jacobian(f, x, h)?;
    let jac_half = fd_jacobian(f, x, 0.5 * h)?;
    let gram = amb.gram(&jac, &jac);
    let gram_half = amb.gram(&jac_half, &jac_half);
    let expected = rep.warped_metric(x)?;
    let dims = rep.dims();
    let mut off_block: f64 = 0.0;
    let mut in_block_rel: f64 = 0.0;
    let mut at_i = 0;
    for (bi, &di) in dims.iter().enumerate() {
        let mut at_j = 0;
        for (bj, &dj) in dims.iter().enumerate() {
            let g = gram.view((at_i, at_j), (di, dj));
            if bi == bj {
                let e = expected.view((at_i, at_j), (di, dj));
                in_block_rel = in_block_rel.max((g - e).amax() / e.amax());
            } else {
                off_block = off_block.max(g.amax());
            }
            at_j += dj;
        }
        at_i += di;
    }
    Ok(PullbackCheck {
        richardson_delta: (&gram - gram_half).amax(),
        quadric_residual: rep.form.quadric_residual(&point),
        gram,
        expected,
        off_block,
        in_block_rel,
    })
}

/// JSON form of a representation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct RepresentationDoc {
    pub c: f64,
    /// Base point; defaults to [`SpaceForm::standard_point`].
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub q: Option<Vec<f64>>,
    pub factors: Vec<FactorDoc>,
    /// Optional explicit frames, one list of columns per factor.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub frames: Option<Vec<Vec<Vec<f64>>>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FactorDoc {
    pub dim: usize,
    /// Mean curvature vector; absent for the first (totally geodesic) factor.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub z: Option<Vec<f64>>,
}

impl RepresentationDoc {
    pub fn build(&self, tol: f64) -> Result<WarpedRepresentation, SpaceFormError> {
        let dims: Vec<usize> = self.factors.iter().map(|f| f.dim).collect();
        let m: usize = dims.iter().sum();
        let form = SpaceForm::new(self.c, m);
        let n = form.ambient_dim();
        let q = match &self.q {
            Some(v) => DVector::from_vec(v.clone()),
            None => form.standard_point(),
        };
        let z = self
            .factors
            .iter()
            .skip(1)
            .map(|f| f.z.clone().map(DVector::from_vec).unwrap_or_else(|| DVector::zeros(n)))
            .collect();
        match &self.frames {
            Some(frames) => {
                let frames = frames
                    .iter()
                    .map(|cols| {
                        let cols: Vec<DVector<f64>> = cols.iter().map(|c| DVector::from_vec(c.clone())).collect();
                        if cols.is_empty() { DMatrix::zeros(n, 0) } else { DMatrix::from_columns(&cols) }
                    })
                    .collect();
                WarpedRepresentation::with_frames(self.c, q, frames, z, tol)
            }
            None => WarpedRepresentation::new(self.c, q, &dims, z, tol),
        }
    }
}

impl From<&WarpedRepresentation> for RepresentationDoc {
    fn from(rep: &WarpedRepresentation) -> Self {
        let mut factors = vec![FactorDoc { dim: rep.dims()[0], z: None }];
        for (i, zi) in rep.z.iter().enumerate() {
            factors.push(FactorDoc { dim: rep.dims()[i + 1], z: Some(zi.iter().copied().collect()) });
        }
        let frames = rep.frames.iter().map(|f| f.column_iter().map(|c| c.iter().copied().collect()).collect()).collect();
        Self { c: rep.c(), q: Some(rep.q.iter().copied().collect()), factors, frames: Some(frames) }
    }
}

/// Whether an inner space is Lorentzian.
pub fn is_lorentzian(space: &InnerSpace) -> bool {
    space.signature == Signature::Lorentzian
}

/// Built-in test representations.
pub mod builtin {
    use super::*;

    fn e(n: usize, i: usize) -> DVector<f64> {
        let mut v = DVector::zeros(n);
        v[i] = 1.0;
        v
    }

    /// `c = 0`, `a = 0`: `Rᵐ⁰ × Rᵐ¹` as an isometric product.
    pub fn flat_product(m0: usize, m1: usize) -> WarpedRepresentation {
        let n = m0 + m1;
        WarpedRepresentation::new(0.0, DVector::zeros(n), &[m0, m1], vec![DVector::zeros(n)], 1e-12).expect("valid")
    }

    /// `c = 0`: rotation about an axis, `R × S^{m1}` with `σ = 1 + t`.
    pub fn rotation(m1: usize) -> WarpedRepresentation {
        let n = 1 + m1;
        WarpedRepresentation::new(0.0, DVector::zeros(n), &[1, m1], vec![-e(n, 0)], 1e-12).expect("valid")
    }

    /// `c = 1`: `S³` as a warped product of a circle arc and two circles
    /// (`z₁ = e₀`, `z₂ = −e₀`).
    pub fn clifford() -> WarpedRepresentation {
        let q = e(4, 3);
        WarpedRepresentation::new(1.0, q, &[1, 1, 1], vec![e(4, 0), -e(4, 0)], 1e-12).expect("valid")
    }

    /// `c = 1`: `S^{1+m1}` as a rotation around a great circle's pole (`z₁ = t e₀`).
    pub fn sphere_rotation(m1: usize, t: f64) -> WarpedRepresentation {
        let n = 2 + m1;
        WarpedRepresentation::new(1.0, e(n, n - 1), &[1, m1], vec![e(n, 0) * t], 1e-12).expect("valid")
    }

    /// `c = −1`: hyperbolic space `H^{1+m1}` with factor curvature `−1 + t²`
    /// (`t = 1` gives horospheres).
    pub fn hyperbolic(m1: usize, t: f64) -> WarpedRepresentation {
        let n = 2 + m1;
        WarpedRepresentation::new(-1.0, e(n, 0), &[1, m1], vec![e(n, 1) * t], 1e-12).expect("valid")
    }

    /// `c = −1` with two horosphere factors sharing `z` (`⟨z, z⟩ = 1 = −c`):
    /// dependent warping functions.
    pub fn hyperbolic_horospheres() -> WarpedRepresentation {
        let n = 4;
        WarpedRepresentation::new(-1.0, e(n, 0), &[1, 1, 1], vec![e(n, 1), e(n, 1)], 1e-12).expect("valid")
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
    fn zero_mean_curvature_gives_constant_warping() {
        let rep = builtin::flat_product(1, 1);
        assert_eq!(rep.a[0], DVector::zeros(2));
        assert_eq!(rep.sigma(1, &DVector::from_vec(vec![3.0, -2.0])).unwrap(), 1.0);
    }

    #[test]
    fn sigma_at_base_point_is_one() {
        for rep in [builtin::rotation(2), builtin::clifford(), builtin::sphere_rotation(2, 0.7), builtin::hyperbolic(2, 0.4)] {
            for i in 1..=rep.k() {
                assert!((rep.sigma(i, &rep.q).unwrap() - 1.0).abs() <= 1e-12);
            }
        }
    }

    #[test]
    fn flat_sigma_values() {
        let rep = WarpedRepresentation::new(0.0, DVector::zeros(2), &[1, 1], vec![-e(2, 0)], 1e-12).unwrap();
        assert_eq!(rep.a[0], e(2, 0));
        assert_eq!(rep.sigma(1, &(e(2, 0) * 2.0)).unwrap(), 3.0);
        assert!(matches!(rep.sigma(1, &(e(2, 0) * -1.5)), Err(SpaceFormError::NonpositiveWarping { i: 1, .. })));
    }

    #[test]
    fn spherical_z_must_be_tangent() {
        let q = e(3, 2);
        let ok = WarpedRepresentation::new(1.0, q.clone(), &[1, 1], vec![e(3, 0) * 0.5], 1e-12).unwrap();
        assert!((ok.sigma(1, &q).unwrap() - 1.0).abs() < 1e-15);
        let bad = WarpedRepresentation::new(1.0, q.clone(), &[1, 1], vec![e(3, 2) * 0.5], 1e-12);
        assert!(matches!(bad, Err(SpaceFormError::NotTangent { i: 1, .. })));
    }

    #[test]
    fn umbilical_constraint_is_checked() {
        let q = e(5, 4);
        let bad = WarpedRepresentation::new(1.0, q, &[2, 1, 1], vec![e(5, 0), e(5, 1)], 1e-12);
        assert!(matches!(bad, Err(SpaceFormError::UmbilicalConstraintViolated { i: 1, j: 2, .. })));
    }

    #[test]
    fn base_point_must_lie_on_quadric() {
        let bad = WarpedRepresentation::new(1.0, e(3, 2) * 2.0, &[1, 1], vec![DVector::zeros(3)], 1e-12);
        assert!(matches!(bad, Err(SpaceFormError::BasePointOffQuadric { .. })));
        let lower = WarpedRepresentation::new(-1.0, -e(3, 0), &[1, 1], vec![DVector::zeros(3)], 1e-12);
        assert!(matches!(lower, Err(SpaceFormError::BasePointOffQuadric { .. })));
    }

    #[test]
    fn psi_of_base_points_is_p0() {
        let rep = builtin::clifford();
        let p0 = rep.factor_chart(0).point(&DVector::from_vec(vec![0.3]));
        let out = rep.psi(&p0, &[rep.q.clone(), rep.q.clone()]).unwrap();
        assert!((out - p0).amax() < 1e-15);
    }

    #[test]
    fn flat_product_psi_adds_displacements() {
        let rep = builtin::flat_product(1, 1);
        let p0 = DVector::from_vec(vec![0.5, 0.0]);
        let p1 = DVector::from_vec(vec![0.0, 2.0]);
        assert_eq!(rep.psi(&p0, &[p1]).unwrap(), DVector::from_vec(vec![0.5, 2.0]));
    }

    #[test]
    fn charts_stay_on_their_quadrics() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for rep in [builtin::clifford(), builtin::sphere_rotation(2, 1.3), builtin::hyperbolic(2, 0.5), builtin::hyperbolic(2, 1.0), builtin::hyperbolic(2, 2.0)] {
            for _ in 0..100 {
                let x = rep.sample_point(0.6, 0.2, &mut rng);
                let p = rep.psi_chart(&x).unwrap();
                assert!(rep.form.quadric_residual(&p) <= 1e-9);
            }
        }
    }

    #[test]
    fn factor_curvature_is_c_plus_z_squared() {
        // the factor chart stays on the sphere of radius 1/√cᵢ around q + Hᵢ/|Hᵢ|² (flat ambient)
        let rep = builtin::sphere_rotation(2, 0.7);
        let chart = rep.factor_chart(1);
        let h2 = chart.h.norm_squared();
        assert!((h2 - rep.factor_curvature(1)).abs() < 1e-14);
        let centre = &rep.q + &chart.h / h2;
        for t in [0.1, 0.5, 1.0] {
            let p = chart.point(&DVector::from_vec(vec![t, -0.3]));
            assert!(((p - &centre).norm_squared() - 1.0 / h2).abs() < 1e-12);
        }
    }

    #[test]
    fn rotation_surface_pullback_is_warped() {
        let rep = builtin::rotation(1);
        let x = DVector::from_vec(vec![0.4, 0.9]);
        let chk = pullback_metric(&rep, &x, 1e-4).unwrap();
        assert!(chk.off_block <= 1e-6);
        assert!(chk.in_block_rel <= 1e-6);
        // T₀ is spanned by z₁/|z₁| = −e₀, so p₀ = −0.4 e₀ and σ = 1 + ⟨p₀, e₀⟩ = 0.6
        assert!((chk.expected[(1, 1)] - 0.6f64.powi(2)).abs() < 1e-14);
    }

    #[test]
    fn hyperbolic_pullback_is_positive_definite() {
        let rep = builtin::hyperbolic(2, 0.6);
        let x = DVector::from_vec(vec![0.2, 0.3, -0.4]);
        let chk = pullback_metric(&rep, &x, 1e-4).unwrap();
        assert!(chk.gram.clone().symmetric_eigen().eigenvalues.min() > 0.0);
        assert!(chk.off_block <= 1e-6 && chk.in_block_rel <= 1e-6);
    }

    #[test]
    fn fixed_base_embedding_stays_on_sphere() {
        let rep = builtin::clifford();
        let p_bar = rep.factor_chart(0).point(&DVector::from_vec(vec![0.2]));
        for i in 0..10 {
            for j in 0..10 {
                let p1 = rep.factor_chart(1).point(&DVector::from_vec(vec![0.6 * i as f64]));
                let p2 = rep.factor_chart(2).point(&DVector::from_vec(vec![0.6 * j as f64]));
                let f = rep.fixed_base_embedding(&p_bar, &[p1, p2]).unwrap();
                assert!((f.norm_squared() - 1.0).abs() <= 1e-10);
            }
        }
        assert_eq!(rep.fixed_base_embedding(&rep.q, &[rep.q.clone(), rep.q.clone()]).unwrap(), rep.q);
        assert!(matches!(builtin::rotation(1).fixed_base_embedding(&DVector::zeros(2), &[DVector::zeros(2)]), Err(SpaceFormError::FlatAmbient)));
    }

    #[test]
    fn trivial_representation_is_identity_chart() {
        let rep = WarpedRepresentation::new(1.0, e(3, 2), &[2], vec![], 1e-12).unwrap();
        let x = DVector::from_vec(vec![0.3, 0.4]);
        let p = rep.psi_chart(&x).unwrap();
        assert_eq!(p, rep.factor_chart(0).point(&x));
    }

    #[test]
    fn document_round_trip() {
        let rep = builtin::clifford();
        let doc = RepresentationDoc::from(&rep);
        let json = serde_json::to_string(&doc).unwrap();
        let back: RepresentationDoc = serde_json::from_str(&json).unwrap();
        assert_eq!(back.build(1e-12).unwrap(), rep);
    }
}
