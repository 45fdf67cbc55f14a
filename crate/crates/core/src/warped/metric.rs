//! Riemannian metrics on the factors, in a single chart each.

use std::fmt;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};

use super::WarpedError;

/// Central-difference step for metrics without analytic derivatives.
pub const METRIC_FD_STEP: f64 = 1e-5;
/// Step for differentiating Christoffel symbols of non-constant-curvature factors.
pub const CHRISTOFFEL_FD_STEP: f64 = 1e-4;

pub type MetricFn = Arc<dyn Fn(&DVector<f64>) -> DMatrix<f64> + Send + Sync>;

/// Metric of one factor in its chart.
#[derive(Clone)]
pub enum FactorMetric {
    Euclidean,
    /// Conformally flat chart `g = φ² I`, `φ = 2 / (1 + κ|x|²)`, of constant
    /// curvature `κ`. For `κ < 0` the chart is the ball `|x|² < 1/|κ|`.
    ConstantCurvature { kappa: f64 },
    /// Quadratic least-squares fit of sampled metric values.
    Sampled(QuadraticFit),
    /// Arbitrary evaluator; derivatives by central differences.
    Custom(MetricFn),
}

impl fmt::Debug for FactorMetric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Euclidean => write!(f, "Euclidean"),
            Self::ConstantCurvature { kappa } => write!(f, "ConstantCurvature({kappa})"),
            Self::Sampled(q) => write!(f, "Sampled(dim {})", q.dim),
            Self::Custom(_) => write!(f, "Custom"),
        }
    }
}

impl FactorMetric {
    pub fn custom(f: impl Fn(&DVector<f64>) -> DMatrix<f64> + Send + Sync + 'static) -> Self {
        Self::Custom(Arc::new(f))
    }

    /// Metric matrix at `x`.
    pub fn eval(&self, x: &DVector<f64>) -> Result<DMatrix<f64>, WarpedError> {
        let d = x.len();
        let g = match self {
            Self::Euclidean => DMatrix::identity(d, d),
            Self::ConstantCurvature { kappa } => {
                let denom = 1.0 + kappa * x.norm_squared();
                if denom <= 0.0 {
                    return Err(WarpedError::OutOfDomain { what: format!("|x|² = {} outside the chart of curvature {kappa}", x.norm_squared()) });
                }
                DMatrix::identity(d, d) * (2.0 / denom).powi(2)
            }
            Self::Sampled(fit) => fit.eval(x)?,
            Self::Custom(f) => f(x),
        };
        if g.nrows() != d || g.ncols() != d {
            return Err(WarpedError::DimensionMismatch { expected: d, got: g.nrows() });
        }
        Ok(g)
    }

    /// `∂_c g` for `c = 0..d`.
    pub fn derivatives(&self, x: &DVector<f64>) -> Result<Vec<DMatrix<f64>>, WarpedError> {
        let d = x.len();
        match self {
            Self::Euclidean => Ok(vec![DMatrix::zeros(d, d); d]),
            Self::ConstantCurvature { kappa } => {
                let denom = 1.0 + kappa * x.norm_squared();
                if denom <= 0.0 {
                    return Err(WarpedError::OutOfDomain { what: format!("|x|² = {} outside the chart of curvature {kappa}", x.norm_squared()) });
                }
                let phi = 2.0 / denom;
                Ok((0..d).map(|c| DMatrix::identity(d, d) * (-2.0 * kappa * phi.powi(3) * x[c])).collect())
            }
            Self::Sampled(fit) => fit.derivatives(x),
            Self::Custom(_) => (0..d)
                .map(|c| {
                    let mut xp = x.clone();
                    let mut xm = x.clone();
                    xp[c] += METRIC_FD_STEP;
                    xm[c] -= METRIC_FD_STEP;
                    Ok((self.eval(&xp)? - self.eval(&xm)?) / (2.0 * METRIC_FD_STEP))
                })
                .collect(),
        }
    }

    /// Christoffel symbols `Γ[a]` with `Γ[a][(b, c)] = Γ^a_{bc}`.
    pub fn christoffel(&self, x: &DVector<f64>) -> Result<Vec<DMatrix<f64>>, WarpedError> {
        let g = self.eval(x)?;
        let dg = self.derivatives(x)?;
        christoffel_from(&g, &dg)
    }

    /// Curvature operator `R(u, v)` of the factor itself, as a matrix acting
    /// on `w`, with `R(X,Y) = ∇_X∇_Y − ∇_Y∇_X − ∇_{[X,Y]}`.
    pub fn curvature(&self, x: &DVector<f64>, u: &DVector<f64>, v: &DVector<f64>) -> Result<DMatrix<f64>, WarpedError> {
        let d = x.len();
        match self {
            Self::Euclidean => Ok(DMatrix::zeros(d, d)),
            Self::ConstantCurvature { kappa } => {
                let g = self.eval(x)?;
                // R(u,v)w = κ(⟨v,w⟩u − ⟨u,w⟩v)
                Ok((u * (&g * v).transpose() - v * (&g * u).transpose()) * *kappa)
            }
            _ => {
                let gamma = self.christoffel(x)?;
                let mut dgamma = Vec::with_capacity(d);
                for c in 0..d {
                    let mut xp = x.clone();
                    let mut xm = x.clone();
                    xp[c] += CHRISTOFFEL_FD_STEP;
                    xm[c] -= CHRISTOFFEL_FD_STEP;
                    let (gp, gm) = (self.christoffel(&xp)?, self.christoffel(&xm)?);
                    dgamma.push(gp.iter().zip(&gm).map(|(p, m)| (p - m) / (2.0 * CHRISTOFFEL_FD_STEP)).collect::<Vec<_>>());
                }
                Ok(riemann_apply(&gamma, &dgamma, u, v))
            }
        }
    }
}

pub(crate) fn christoffel_from(g: &DMatrix<f64>, dg: &[DMatrix<f64>]) -> Result<Vec<DMatrix<f64>>, WarpedError> {
    let d = g.nrows();
    let ginv = g.clone().try_inverse().ok_or(WarpedError::NotPositiveDefinite)?;
    // Γ_{e bc} = ½(∂_b g_{ec} + ∂_c g_{eb} − ∂_e g_{bc})
    let lower: Vec<DMatrix<f64>> =
        (0..d).map(|e| DMatrix::from_fn(d, d, |b, c| 0.5 * (dg[b][(e, c)] + dg[c][(e, b)] - dg[e][(b, c)]))).collect();
    Ok((0..d)
        .map(|a| {
            let mut m = DMatrix::zeros(d, d);
            for (e, l) in lower.iter().enumerate() {
                m += l * ginv[(a, e)];
            }
            m
        })
        .collect())
}

/// `R(u,v)` as a matrix from Christoffel symbols and their partial derivatives
/// `dgamma[c][a] = ∂_c Γ^a`.
pub(crate) fn riemann_apply(gamma: &[DMatrix<f64>], dgamma: &[Vec<DMatrix<f64>>], u: &DVector<f64>, v: &DVector<f64>) -> DMatrix<f64> {
    let d = gamma.len();
    // R^a_{bcd} = ∂_c Γ^a_{db} − ∂_d Γ^a_{cb} + Γ^a_{ce} Γ^e_{db} − Γ^a_{de} Γ^e_{cb}
    DMatrix::from_fn(d, d, |a, b| {
        let mut sum = 0.0;
        for c in 0..d {
            for dd in 0..d {
                let w = u[c] * v[dd];
                if w == 0.0 {
                    continue;
                }
                let mut r = dgamma[c][a][(dd, b)] - dgamma[dd][a][(c, b)];
                for e in 0..d {
                    r += gamma[a][(c, e)] * gamma[e][(dd, b)] - gamma[a][(dd, e)] * gamma[e][(c, b)];
                }
                sum += w * r;
            }
        }
        sum
    })
}

/// Entrywise fit `g(x) ≈ Σ_m c_m x^m` over monomials of degree ≤ 2.
#[derive(Debug, Clone)]
pub struct QuadraticFit {
    dim: usize,
    /// Coefficient matrices in the order 1, x_i, x_i x_j (i ≤ j).
    coefficients: Vec<DMatrix<f64>>,
    points: Vec<DVector<f64>>,
    values: Vec<DMatrix<f64>>,
}

impl QuadraticFit {
    pub fn fit(points: Vec<DVector<f64>>, values: Vec<DMatrix<f64>>) -> Result<Self, WarpedError> {
        let dim = points.first().map(|p| p.len()).ok_or_else(|| WarpedError::InvalidSpec("sampled metric without points".into()))?;
        if points.len() != values.len() {
            return Err(WarpedError::DimensionMismatch { expected: points.len(), got: values.len() });
        }
        for (p, v) in points.iter().zip(&values) {
            if p.len() != dim {
                return Err(WarpedError::DimensionMismatch { expected: dim, got: p.len() });
            }
            if v.nrows() != dim || v.ncols() != dim {
                return Err(WarpedError::DimensionMismatch { expected: dim, got: v.nrows() });
            }
        }
        let terms = 1 + dim + dim * (dim + 1) / 2;
        let design = DMatrix::from_fn(points.len(), terms, |r, t| monomials(&points[r])[t]);
        let svd = crate::linalg::svd(&design);
        let smax = svd.singular_values.max();
        let rank = svd.singular_values.iter().filter(|&&s| s > 1e-10 * smax).count();
        if rank < terms {
            return Err(WarpedError::InvalidSpec(format!("sampled metric needs {terms} well-spread points, design rank is {rank}")));
        }
        let mut coefficients = vec![DMatrix::zeros(dim, dim); terms];
        for i in 0..dim {
            for j in 0..dim {
                let rhs = DVector::from_iterator(values.len(), values.iter().map(|v| 0.5 * (v[(i, j)] + v[(j, i)])));
                let sol = svd.solve(&rhs, 1e-12 * smax).map_err(|e| WarpedError::InvalidSpec(e.to_string()))?;
                for t in 0..terms {
                    coefficients[t][(i, j)] = sol[t];
                }
            }
        }
        Ok(Self { dim, coefficients, points, values })
    }

    pub fn points(&self) -> &[DVector<f64>] {
        &self.points
    }

    pub fn values(&self) -> &[DMatrix<f64>] {
        &self.values
    }

    fn eval(&self, x: &DVector<f64>) -> Result<DMatrix<f64>, WarpedError> {
        if x.len() != self.dim {
            return Err(WarpedError::DimensionMismatch { expected: self.dim, got: x.len() });
        }
        let m = monomials(x);
        let mut g = DMatrix::zeros(self.dim, self.dim);
        for (c, t) in self.coefficients.iter().zip(m) {
            g += c * t;
        }
        if g.clone().cholesky().is_none() {
            return Err(WarpedError::OutOfDomain { what: "fitted metric is not positive definite".into() });
        }
        Ok(g)
    }

    fn derivatives(&self, x: &DVector<f64>) -> Result<Vec<DMatrix<f64>>, WarpedError> {
        let d = self.dim;
        let mut out = vec![self.coefficients[0].clone() * 0.0; d];
        for (c, o) in out.iter_mut().enumerate() {
            *o += &self.coefficients[1 + c];
            let mut t = 1 + d;
            for i in 0..d {
                for j in i..d {
                    let coef = &self.coefficients[t];
                    if i == c && j == c {
                        *o += coef * (2.0 * x[c]);
                    } else if i == c {
                        *o += coef * x[j];
                    } else if j == c {
                        *o += coef * x[i];
                    }
                    t += 1;
                }
            }
        }
        Ok(out)
    }
}

fn monomials(x: &DVector<f64>) -> Vec<f64> {
    let d = x.len();
    let mut m = Vec::with_capacity(1 + d + d * (d + 1) / 2);
    m.push(1.0);
    m.extend(x.iter());
    for i in 0..d {
        for j in i..d {
            m.push(x[i] * x[j]);
        }
    }
    m
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn conformal_chart_derivative_matches_fd() {
        let m = FactorMetric::ConstantCurvature { kappa: -0.7 };
        let x = DVector::from_vec(vec![0.3, -0.2]);
        let d = m.derivatives(&x).unwrap();
        let fd = FactorMetric::custom(move |y| FactorMetric::ConstantCurvature { kappa: -0.7 }.eval(y).unwrap()).derivatives(&x).unwrap();
        for c in 0..2 {
            assert!((&d[c] - &fd[c]).amax() < 1e-8);
        }
    }

    #[test]
    fn constant_curvature_matches_generic_curvature() {
        let kappa = 1.3;
        let analytic = FactorMetric::ConstantCurvature { kappa };
        let generic = FactorMetric::custom(move |y| FactorMetric::ConstantCurvature { kappa }.eval(y).unwrap());
        let x = DVector::from_vec(vec![0.2, 0.1, -0.3]);
        let u = DVector::from_vec(vec![1.0, 0.5, 0.0]);
        let v = DVector::from_vec(vec![0.0, -0.4, 1.0]);
        let a = analytic.curvature(&x, &u, &v).unwrap();
        let g = generic.curvature(&x, &u, &v).unwrap();
        assert!((a - g).amax() < 1e-5);
    }

    #[test]
    fn quadratic_fit_reproduces_quadratic_metric() {
        let exact = |x: &DVector<f64>| DMatrix::from_row_slice(2, 2, &[2.0 + x[0] * x[0], 0.1 * x[1], 0.1 * x[1], 1.0 + x[0] * x[1]]);
        let mut pts = Vec::new();
        for i in -2..=2 {
            for j in -2..=2 {
                pts.push(DVector::from_vec(vec![0.1 * i as f64, 0.1 * j as f64]));
            }
        }
        let vals = pts.iter().map(exact).collect();
        let fit = QuadraticFit::fit(pts, vals).unwrap();
        let x = DVector::from_vec(vec![0.13, -0.05]);
        assert!((fit.eval(&x).unwrap() - exact(&x)).amax() < 1e-12);
        let d = fit.derivatives(&x).unwrap();
        assert!((d[0][(0, 0)] - 0.26).abs() < 1e-12);
        assert!((d[1][(1, 1)] - 0.13).abs() < 1e-12);
    }

    #[test]
    fn too_few_samples_rejected() {
        let pts = vec![DVector::from_vec(vec![0.0]), DVector::from_vec(vec![1.0])];
        let vals = vec![DMatrix::identity(1, 1); 2];
        assert!(matches!(QuadraticFit::fit(pts, vals), Err(WarpedError::InvalidSpec(_))));
    }
}
