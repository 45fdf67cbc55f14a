//! Warped product metrics `M₀ ×_{ρ₁} M₁ × … ×_{ρ_k} M_k` in product charts.
//!
//! Points are chart coordinates `x = (x₀, x₁, …, x_k)` and tangent vectors
//! are coefficient vectors in the coordinate frame. The metric is
//! `g₀ ⊕ ρ₁(x₀)² g₁ ⊕ … ⊕ ρ_k(x₀)² g_k`.
//!
//! The connection is the product connection corrected by
//! `Σⱼ (⟨Xʲ,Yʲ⟩ηⱼ − ⟨X,ηⱼ⟩Yʲ − ⟨Y,ηⱼ⟩Xʲ)` with `ηⱼ = −grad log ρⱼ`, and the
//! curvature operator is
//!
//! ```text
//! R(X,Y) = R̃(X,Y) − Σᵢⱼ ⟨ηᵢ,ηⱼ⟩ Xⁱ∧Yʲ
//!          + Σⱼ [(∇_{X⁰}ηⱼ − ⟨ηⱼ,X⟩ηⱼ)∧Yʲ + Xʲ∧(∇_{Y⁰}ηⱼ − ⟨ηⱼ,Y⟩ηⱼ)]
//! ```
//!
//! with `R(X,Y) = ∇_X∇_Y − ∇_Y∇_X − ∇_{[X,Y]}` and
//! `(X∧Y)Z = ⟨Y,Z⟩X − ⟨X,Z⟩Y` in the warped metric. With these conventions
//! the sectional curvature is `⟨R(X,Y)Y,X⟩ / |X∧Y|²`; the flat polar plane
//! gives `R ≡ 0` and the horospherical plane gives `−1`.

mod doc;
mod grouping;
mod metric;
mod oracle;
mod warping;

use std::ops::AddAssign;

use nalgebra::{DMatrix, DVector};
use thiserror::Error;

pub use doc::{MetricDoc, WarpedFactorDoc, WarpedSpecDoc, WarpingDoc};
pub use grouping::{group_warping_samples, group_warpings, is_constant, WarpingGroups, CONSTANCY_TOL};
pub use metric::{FactorMetric, MetricFn, QuadraticFit, CHRISTOFFEL_FD_STEP, METRIC_FD_STEP};
pub use oracle::{fd_christoffel, fd_riemann, FdRiemann};
pub use warping::{GradientFn, Monomial, ScalarFn, Warping, WARPING_FD_STEP, WARPING_HESSIAN_STEP};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum WarpedError {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("point outside the chart domain: {what}")]
    OutOfDomain { what: String },
    #[error("metric is not positive definite")]
    NotPositiveDefinite,
    #[error("invalid metric specification: {0}")]
    InvalidSpec(String),
    #[error("degenerate sample grid: {0}")]
    DegenerateGrid(String),
}

/// Factor dimensions, factor metrics and warping functions.
#[derive(Debug, Clone)]
pub struct WarpedMetricSpec {
    dims: Vec<usize>,
    metrics: Vec<FactorMetric>,
    warpings: Vec<Warping>,
}

/// Everything the connection and curvature need at one point.
#[derive(Debug, Clone)]
pub struct PointData {
    /// Assembled warped metric.
    pub metric: DMatrix<f64>,
    /// Factor metrics (unwarped) and their Christoffel symbols.
    pub factor_metrics: Vec<DMatrix<f64>>,
    pub factor_christoffel: Vec<Vec<DMatrix<f64>>>,
    /// `ρⱼ(x₀)` for `j = 1..k` (index `j − 1`).
    pub rho: Vec<f64>,
    /// `ηⱼ = −grad log ρⱼ` in base coordinates.
    pub eta: Vec<DVector<f64>>,
    /// Columns `∇_{∂c} ηⱼ` (base Levi-Civita connection).
    pub nabla_eta: Vec<DMatrix<f64>>,
    x: DVector<f64>,
}

impl WarpedMetricSpec {
    /// `factors[0]` is the base; `warpings[j − 1]` warps factor `j`.
    pub fn new(factors: Vec<(usize, FactorMetric)>, warpings: Vec<Warping>) -> Result<Self, WarpedError> {
        if factors.is_empty() {
            return Err(WarpedError::InvalidSpec("no factors".into()));
        }
        if warpings.len() + 1 != factors.len() {
            return Err(WarpedError::DimensionMismatch { expected: factors.len() - 1, got: warpings.len() });
        }
        let (dims, metrics): (Vec<usize>, Vec<FactorMetric>) = factors.into_iter().unzip();
        if dims.iter().skip(1).any(|&d| d == 0) {
            return Err(WarpedError::InvalidSpec("warped factors must have positive dimension".into()));
        }
        if let FactorMetric::Sampled(fit) = &metrics[0] {
            if fit.points()[0].len() != dims[0] {
                return Err(WarpedError::DimensionMismatch { expected: dims[0], got: fit.points()[0].len() });
            }
        }
        for w in &warpings {
            w.check_dim(dims[0])?;
        }
        Ok(Self { dims, metrics, warpings })
    }

    /// Euclidean factors.
    pub fn euclidean(dims: &[usize], warpings: Vec<Warping>) -> Result<Self, WarpedError> {
        Self::new(dims.iter().map(|&d| (d, FactorMetric::Euclidean)).collect(), warpings)
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    /// Total dimension.
    pub fn n(&self) -> usize {
        self.dims.iter().sum()
    }

    /// Number of warped factors.
    pub fn k(&self) -> usize {
        self.warpings.len()
    }

    pub fn metrics(&self) -> &[FactorMetric] {
        &self.metrics
    }

    pub fn warpings(&self) -> &[Warping] {
        &self.warpings
    }

    pub fn offset(&self, j: usize) -> usize {
        self.dims[..j].iter().sum()
    }

    /// Coordinates of factor `j`.
    pub fn factor_coords(&self, x: &DVector<f64>, j: usize) -> DVector<f64> {
        x.rows(self.offset(j), self.dims[j]).into_owned()
    }

    /// `Xʲ = (πⱼ)_* X`, as a full-length vector.
    pub fn component(&self, v: &DVector<f64>, j: usize) -> DVector<f64> {
        let mut out = DVector::zeros(v.len());
        let o = self.offset(j);
        out.rows_mut(o, self.dims[j]).copy_from(&v.rows(o, self.dims[j]));
        out
    }

    fn check_point(&self, x: &DVector<f64>) -> Result<(), WarpedError> {
        if x.len() != self.n() {
            return Err(WarpedError::DimensionMismatch { expected: self.n(), got: x.len() });
        }
        Ok(())
    }

    /// Warping values `ρⱼ(x₀)`, failing where some `ρⱼ ≤ 0`.
    pub fn rho(&self, x: &DVector<f64>) -> Result<Vec<f64>, WarpedError> {
        self.check_point(x)?;
        let x0 = self.factor_coords(x, 0);
        self.warpings
            .iter()
            .enumerate()
            .map(|(j, w)| {
                let r = w.value(&x0);
                if r > 0.0 && r.is_finite() {
                    Ok(r)
                } else {
                    Err(WarpedError::OutOfDomain { what: format!("ρ{} = {r}", j + 1) })
                }
            })
            .collect()
    }

    /// Assembled block metric.
    pub fn metric(&self, x: &DVector<f64>) -> Result<DMatrix<f64>, WarpedError> {
        let rho = self.rho(x)?;
        let n = self.n();
        let mut g = DMatrix::zeros(n, n);
        for j in 0..self.dims.len() {
            let o = self.offset(j);
            let w = if j == 0 { 1.0 } else { rho[j - 1].powi(2) };
            g.view_mut((o, o), (self.dims[j], self.dims[j])).copy_from(&(self.metrics[j].eval(&self.factor_coords(x, j))? * w));
        }
        Ok(g)
    }

    /// `ηⱼ = −grad log ρⱼ` at the base point `x₀`, `j ≥ 1`.
    pub fn eta(&self, j: usize, x0: &DVector<f64>) -> Result<DVector<f64>, WarpedError> {
        let w = &self.warpings[j - 1];
        let r = w.value(x0);
        if r <= 0.0 {
            return Err(WarpedError::OutOfDomain { what: format!("ρ{j} = {r}") });
        }
        let g0 = self.metrics[0].eval(x0)?;
        let ginv = g0.try_inverse().ok_or(WarpedError::NotPositiveDefinite)?;
        Ok(-(ginv * w.gradient(x0)) / r)
    }

    pub fn at(&self, x: &DVector<f64>) -> Result<PointData, WarpedError> {
        let rho = self.rho(x)?;
        let metric = self.metric(x)?;
        let mut factor_metrics = Vec::with_capacity(self.dims.len());
        let mut factor_christoffel = Vec::with_capacity(self.dims.len());
        let mut base_dg = Vec::new();
        for j in 0..self.dims.len() {
            let xj = self.factor_coords(x, j);
            let g = self.metrics[j].eval(&xj)?;
            let dg = self.metrics[j].derivatives(&xj)?;
            factor_christoffel.push(metric::christoffel_from(&g, &dg)?);
            factor_metrics.push(g);
            if j == 0 {
                base_dg = dg;
            }
        }
        let x0 = self.factor_coords(x, 0);
        let n0 = self.dims[0];
        let ginv = factor_metrics[0].clone().try_inverse().ok_or(WarpedError::NotPositiveDefinite)?;
        let mut eta = Vec::with_capacity(self.k());
        let mut nabla_eta = Vec::with_capacity(self.k());
        for (j, w) in self.warpings.iter().enumerate() {
            let grad = w.gradient(&x0) / rho[j];
            let hess_log = w.hessian(&x0) / rho[j] - &grad * grad.transpose();
            let e = -(&ginv * &grad);
            let mut nab = DMatrix::zeros(n0, n0);
            for c in 0..n0 {
                // ∂_c η = g⁻¹(∂_c g)g⁻¹∇L − g⁻¹ ∂_c∇L, then add Γ^a_{ce} ηᵉ
                let d_eta = &ginv * &base_dg[c] * &ginv * &grad - &ginv * hess_log.column(c);
                let gamma_term = DVector::from_fn(n0, |a, _| (0..n0).map(|e2| factor_christoffel[0][a][(c, e2)] * e[e2]).sum::<f64>());
                nab.set_column(c, &(d_eta + gamma_term));
            }
            eta.push(e);
            nabla_eta.push(nab);
        }
        Ok(PointData { metric, factor_metrics, factor_christoffel, rho, eta, nabla_eta, x: x.clone() })
    }

    /// `⟨X, Y⟩` in the warped metric.
    pub fn warped_inner(&self, x: &DVector<f64>, a: &DVector<f64>, b: &DVector<f64>) -> Result<f64, WarpedError> {
        self.check_vectors(a, b)?;
        Ok(a.dot(&(self.metric(x)? * b)))
    }

    fn check_vectors(&self, a: &DVector<f64>, b: &DVector<f64>) -> Result<(), WarpedError> {
        for v in [a, b] {
            if v.len() != self.n() {
                return Err(WarpedError::DimensionMismatch { expected: self.n(), got: v.len() });
            }
        }
        Ok(())
    }

    /// Base part of `v` as a base-coordinate vector.
    fn base(&self, v: &DVector<f64>) -> DVector<f64> {
        v.rows(0, self.dims[0]).into_owned()
    }

    fn embed_base(&self, v: &DVector<f64>) -> DVector<f64> {
        let mut out = DVector::zeros(self.n());
        out.rows_mut(0, self.dims[0]).copy_from(v);
        out
    }

    /// `∇_X Y` for constant-coefficient fields `X`, `Y`.
    pub fn connection(&self, x: &DVector<f64>, a: &DVector<f64>, b: &DVector<f64>) -> Result<DVector<f64>, WarpedError> {
        self.check_vectors(a, b)?;
        let pd = self.at(x)?;
        Ok(self.connection_at(&pd, a, b))
    }

    pub fn connection_at(&self, pd: &PointData, a: &DVector<f64>, b: &DVector<f64>) -> DVector<f64> {
        let n = self.n();
        let mut out = DVector::zeros(n);
        // product connection
        for j in 0..self.dims.len() {
            let (o, d) = (self.offset(j), self.dims[j]);
            let (aj, bj) = (a.rows(o, d), b.rows(o, d));
            for c in 0..d {
                out[o + c] += aj.dot(&(&pd.factor_christoffel[j][c] * bj));
            }
        }
        let g0 = &pd.factor_metrics[0];
        let (a0, b0) = (self.base(a), self.base(b));
        for j in 1..self.dims.len() {
            let eta = &pd.eta[j - 1];
            let (aj, bj) = (self.component(a, j), self.component(b, j));
            let inner = aj.dot(&(&pd.metric * &bj));
            out += self.embed_base(&(eta * inner));
            out -= bj * a0.dot(&(g0 * eta));
            out -= aj * b0.dot(&(g0 * eta));
        }
        out
    }

    /// `(A∧B)` as a matrix in the warped metric `g`.
    fn wedge(g: &DMatrix<f64>, a: &DVector<f64>, b: &DVector<f64>) -> DMatrix<f64> {
        a * (g * b).transpose() - b * (g * a).transpose()
    }

    /// `R(X,Y)` as a matrix acting on tangent vectors, for constant fields.
    pub fn curvature_operator(&self, x: &DVector<f64>, a: &DVector<f64>, b: &DVector<f64>) -> Result<DMatrix<f64>, WarpedError> {
        self.check_vectors(a, b)?;
        let pd = self.at(x)?;
        self.curvature_at(&pd, a, b)
    }

    pub fn curvature_at(&self, pd: &PointData, a: &DVector<f64>, b: &DVector<f64>) -> Result<DMatrix<f64>, WarpedError> {
        let n = self.n();
        let g = &pd.metric;
        let mut r = DMatrix::zeros(n, n);
        for j in 0..self.dims.len() {
            let (o, d) = (self.offset(j), self.dims[j]);
            let aj = a.rows(o, d).into_owned();
            let bj = b.rows(o, d).into_owned();
            if aj.iter().all(|&v| v == 0.0) || bj.iter().all(|&v| v == 0.0) {
                continue;
            }
            let rj = self.metrics[j].curvature(&pd.x.rows(o, d).into_owned(), &aj, &bj)?;
            r.view_mut((o, o), (d, d)).add_assign(&rj);
        }
        let g0 = &pd.factor_metrics[0];
        let (a0, b0) = (self.base(a), self.base(b));
        let k = self.k();
        let comps_a: Vec<DVector<f64>> = (1..=k).map(|j| self.component(a, j)).collect();
        let comps_b: Vec<DVector<f64>> = (1..=k).map(|j| self.component(b, j)).collect();
        for i in 0..k {
            for j in 0..k {
                let c = pd.eta[i].dot(&(g0 * &pd.eta[j]));
                r -= Self::wedge(g, &comps_a[i], &comps_b[j]) * c;
            }
        }
        for j in 0..k {
            let eta = &pd.eta[j];
            let xi_a = &pd.nabla_eta[j] * &a0 - eta * a0.dot(&(g0 * eta));
            let xi_b = &pd.nabla_eta[j] * &b0 - eta * b0.dot(&(g0 * eta));
            r += Self::wedge(g, &self.embed_base(&xi_a), &comps_b[j]);
            r += Self::wedge(g, &comps_a[j], &self.embed_base(&xi_b));
        }
        Ok(r)
    }

    /// `⟨R(X,Y)Z, W⟩`.
    pub fn curvature_form(
        &self,
        x: &DVector<f64>,
        vx: &DVector<f64>,
        vy: &DVector<f64>,
        vz: &DVector<f64>,
        vw: &DVector<f64>,
    ) -> Result<f64, WarpedError> {
        let pd = self.at(x)?;
        let r = self.curvature_at(&pd, vx, vy)?;
        Ok((r * vz).dot(&(&pd.metric * vw)))
    }

    /// Sectional curvature of the plane spanned by `X`, `Y`.
    pub fn sectional_curvature(&self, x: &DVector<f64>, a: &DVector<f64>, b: &DVector<f64>) -> Result<f64, WarpedError> {
        let pd = self.at(x)?;
        let g = &pd.metric;
        let r = self.curvature_at(&pd, a, b)?;
        let num = (r * b).dot(&(g * a));
        let den = a.dot(&(g * a)) * b.dot(&(g * b)) - a.dot(&(g * b)).powi(2);
        if den <= 0.0 {
            return Err(WarpedError::InvalidSpec("degenerate plane".into()));
        }
        Ok(num / den)
    }
}

/// Built-in specifications.
pub mod builtin {
    use super::*;

    /// Flat plane in polar coordinates: `(0,∞) ×_r S¹`.
    pub fn polar_flat() -> WarpedMetricSpec {
        WarpedMetricSpec::euclidean(&[1, 1], vec![Warping::Affine { a: 0.0, b: DVector::from_vec(vec![1.0]) }]).expect("valid")
    }

    /// Hyperbolic plane in horospherical coordinates: `ℝ ×_{eᵗ} ℝ`.
    pub fn horospherical() -> WarpedMetricSpec {
        WarpedMetricSpec::euclidean(&[1, 1], vec![Warping::Exponential { a: 1.0, b: DVector::from_vec(vec![1.0]), c: 0.0 }])
            .expect("valid")
    }

    /// Euclidean 3-space in spherical coordinates: `(0,∞) ×_r S²`, with the
    /// sphere in its conformal chart.
    pub fn spherical_flat() -> WarpedMetricSpec {
        WarpedMetricSpec::new(
            vec![(1, FactorMetric::Euclidean), (2, FactorMetric::ConstantCurvature { kappa: 1.0 })],
            vec![Warping::Affine { a: 0.0, b: DVector::from_vec(vec![1.0]) }],
        )
        .expect("valid")
    }

    /// Three warpings on a 2-dimensional base with `ρ₂ = 2ρ₁` and `ρ₃`
    /// independent.
    pub fn dependent_warpings() -> WarpedMetricSpec {
        let rho1 = Warping::Exponential { a: 1.0, b: DVector::from_vec(vec![0.8, -0.3]), c: 0.5 };
        let rho3 = Warping::Polynomial {
            dim: 2,
            terms: vec![Monomial { coef: 1.5, powers: vec![0, 0] }, Monomial { coef: 0.4, powers: vec![1, 1] }, Monomial { coef: 0.2, powers: vec![0, 2] }],
        };
        WarpedMetricSpec::euclidean(&[2, 1, 1, 2], vec![rho1.clone(), rho1.scaled(2.0), rho3]).expect("valid")
    }

    /// Random spec with base dimension 1–2, one or two warped factors of
    /// dimension 1–2, factor metrics drawn from all kinds and warpings from
    /// all families. Warpings stay positive and charts valid for
    /// `|xᵢ| ≤ 0.3` (see [`random_point`]).
    pub fn random_spec<R: rand::Rng + ?Sized>(rng: &mut R) -> WarpedMetricSpec {
        let n0 = rng.random_range(1..=2);
        let k = rng.random_range(1..=2);
        let mut factors = vec![(n0, random_metric(n0, rng))];
        for _ in 0..k {
            let d = rng.random_range(1..=2);
            factors.push((d, random_metric(d, rng)));
        }
        let warpings = (0..k).map(|_| random_warping(n0, rng)).collect();
        WarpedMetricSpec::new(factors, warpings).expect("valid random spec")
    }

    /// Uniform point with all coordinates in `[−0.3, 0.3]`.
    pub fn random_point<R: rand::Rng + ?Sized>(spec: &WarpedMetricSpec, rng: &mut R) -> DVector<f64> {
        DVector::from_fn(spec.n(), |_, _| rng.random_range(-0.3..0.3))
    }

    fn random_metric<R: rand::Rng + ?Sized>(d: usize, rng: &mut R) -> FactorMetric {
        match rng.random_range(0..4) {
            0 => FactorMetric::Euclidean,
            1 => FactorMetric::ConstantCurvature { kappa: rng.random_range(0.3..1.5) },
            2 => FactorMetric::ConstantCurvature { kappa: -rng.random_range(0.3..1.5) },
            _ => {
                // samples of I + x-dependent symmetric quadratic perturbation
                let coef: Vec<DMatrix<f64>> = (0..=d * (d + 3) / 2)
                    .map(|_| {
                        let m = DMatrix::from_fn(d, d, |_, _| rng.random_range(-0.2..0.2));
                        (&m + m.transpose()) * 0.5
                    })
                    .collect();
                let eval = |x: &DVector<f64>| {
                    let mut g = DMatrix::identity(d, d);
                    let mut t = 0;
                    for i in 0..d {
                        g += &coef[t] * x[i];
                        t += 1;
                    }
                    for i in 0..d {
                        for j in i..d {
                            g += &coef[t] * (x[i] * x[j]);
                            t += 1;
                        }
                    }
                    g
                };
                let mut pts = Vec::new();
                for i in -2..=2 {
                    if d == 1 {
                        pts.push(DVector::from_vec(vec![0.2 * i as f64]));
                    } else {
                        for j in -2..=2 {
                            pts.push(DVector::from_vec(vec![0.2 * i as f64, 0.2 * j as f64]));
                        }
                    }
                }
                let vals = pts.iter().map(eval).collect();
                FactorMetric::Sampled(QuadraticFit::fit(pts, vals).expect("well-spread grid"))
            }
        }
    }

    fn random_warping<R: rand::Rng + ?Sized>(n0: usize, rng: &mut R) -> Warping {
        let b = DVector::from_fn(n0, |_, _| rng.random_range(-1.0..1.0));
        match rng.random_range(0..3) {
            0 => Warping::Affine { a: rng.random_range(1.0..2.0), b },
            1 => Warping::Exponential { a: rng.random_range(0.5..1.5), b, c: rng.random_range(0.0..0.5) },
            _ => {
                let mut terms = vec![Monomial { coef: rng.random_range(1.0..2.0), powers: vec![0; n0] }];
                for _ in 0..3 {
                    let mut powers: Vec<u32> = (0..n0).map(|_| rng.random_range(0..3u32)).collect();
                    if powers.iter().all(|&e| e == 0) {
                        powers[0] = 1;
                    }
                    terms.push(Monomial { coef: rng.random_range(-1.0..1.0), powers });
                }
                Warping::Polynomial { dim: n0, terms }
            }
        }
    }
}

#[cfg(test)]
mod tests;
