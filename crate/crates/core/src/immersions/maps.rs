//! Polynomial maps between coordinate spaces, used as factor immersions and
//! as built-in immersion families.

use std::fmt;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::ImmersionError;

/// One monomial `Πxᵢ^powersᵢ` with a vector coefficient.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolyTerm {
    pub powers: Vec<u32>,
    pub coef: Vec<f64>,
}

/// `x ↦ Σ coef·Πxᵢ^powersᵢ`, `Rⁿ → Rᵐ`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolynomialMap {
    pub n: usize,
    pub m: usize,
    pub terms: Vec<PolyTerm>,
}

fn monomial(x: &DVector<f64>, powers: &[u32]) -> f64 {
    powers.iter().enumerate().map(|(i, &p)| x[i].powi(p as i32)).product()
}

impl PolynomialMap {
    pub fn new(n: usize, m: usize, terms: Vec<PolyTerm>) -> Result<Self, ImmersionError> {
        for t in &terms {
            if t.powers.len() != n {
                return Err(ImmersionError::DimensionMismatch { expected: n, got: t.powers.len() });
            }
            if t.coef.len() != m {
                return Err(ImmersionError::DimensionMismatch { expected: m, got: t.coef.len() });
            }
        }
        Ok(Self { n, m, terms })
    }

    pub fn identity(n: usize) -> Self {
        Self::linear(&DMatrix::identity(n, n), &DVector::zeros(n))
    }

    /// `x ↦ Ax + b`.
    pub fn linear(a: &DMatrix<f64>, b: &DVector<f64>) -> Self {
        let (m, n) = a.shape();
        let mut terms = vec![PolyTerm { powers: vec![0; n], coef: b.iter().copied().collect() }];
        for j in 0..n {
            let mut powers = vec![0; n];
            powers[j] = 1;
            terms.push(PolyTerm { powers, coef: a.column(j).iter().copied().collect() });
        }
        Self { n, m, terms }
    }

    /// Graph `x ↦ (x, h(x))` of a polynomial `h: Rⁿ → Rᵏ`.
    pub fn graph(height: &PolynomialMap) -> Self {
        let (n, k) = (height.n, height.m);
        let mut out = Self::identity(n);
        out.m = n + k;
        for t in &mut out.terms {
            t.coef.resize(n + k, 0.0);
        }
        for t in &height.terms {
            let mut coef = vec![0.0; n];
            coef.extend_from_slice(&t.coef);
            out.terms.push(PolyTerm { powers: t.powers.clone(), coef });
        }
        out
    }

    pub fn eval(&self, x: &DVector<f64>) -> DVector<f64> {
        let mut out = DVector::zeros(self.m);
        for t in &self.terms {
            let v = monomial(x, &t.powers);
            for (o, c) in out.iter_mut().zip(&t.coef) {
                *o += c * v;
            }
        }
        out
    }

    pub fn jacobian(&self, x: &DVector<f64>) -> DMatrix<f64> {
        let mut out = DMatrix::zeros(self.m, self.n);
        for t in &self.terms {
            for j in 0..self.n {
                if t.powers[j] == 0 {
                    continue;
                }
                let mut p = t.powers.clone();
                p[j] -= 1;
                let v = t.powers[j] as f64 * monomial(x, &p);
                for (i, c) in t.coef.iter().enumerate() {
                    out[(i, j)] += c * v;
                }
            }
        }
        out
    }

    /// Second derivatives `∂ⱼ∂ₖ` as `n × n` entries of vectors in `Rᵐ`.
    pub fn hessians(&self, x: &DVector<f64>) -> Vec<Vec<DVector<f64>>> {
        let mut out = vec![vec![DVector::zeros(self.m); self.n]; self.n];
        for t in &self.terms {
            for j in 0..self.n {
                for k in 0..self.n {
                    let mut p = t.powers.clone();
                    let fj = p[j] as f64;
                    if fj == 0.0 {
                        continue;
                    }
                    p[j] -= 1;
                    let fk = p[k] as f64;
                    if fk == 0.0 {
                        continue;
                    }
                    p[k] -= 1;
                    let v = fj * fk * monomial(x, &p);
                    for (i, c) in t.coef.iter().enumerate() {
                        out[j][k][i] += c * v;
                    }
                }
            }
        }
        out
    }
}

pub type VectorFn = Arc<dyn Fn(&DVector<f64>) -> DVector<f64> + Send + Sync>;

/// A factor immersion in chart coordinates of a representation factor.
#[derive(Clone)]
pub enum FactorMap {
    Polynomial(PolynomialMap),
    /// Evaluator `Rⁿ → Rᵐ`; derivatives by central differences.
    Custom { n: usize, m: usize, f: VectorFn },
}

impl fmt::Debug for FactorMap {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Polynomial(p) => write!(f, "Polynomial({p:?})"),
            Self::Custom { n, m, .. } => write!(f, "Custom({n} -> {m})"),
        }
    }
}

/// Central-difference step for Jacobians of custom factor maps.
const FACTOR_FD_STEP: f64 = 1e-5;

impl FactorMap {
    pub fn identity(n: usize) -> Self {
        Self::Polynomial(PolynomialMap::identity(n))
    }

    pub fn custom(n: usize, m: usize, f: impl Fn(&DVector<f64>) -> DVector<f64> + Send + Sync + 'static) -> Self {
        Self::Custom { n, m, f: Arc::new(f) }
    }

    pub fn n(&self) -> usize {
        match self {
            Self::Polynomial(p) => p.n,
            Self::Custom { n, .. } => *n,
        }
    }

    pub fn m(&self) -> usize {
        match self {
            Self::Polynomial(p) => p.m,
            Self::Custom { m, .. } => *m,
        }
    }

    pub fn eval(&self, x: &DVector<f64>) -> DVector<f64> {
        match self {
            Self::Polynomial(p) => p.eval(x),
            Self::Custom { f, .. } => f(x),
        }
    }

    pub fn jacobian(&self, x: &DVector<f64>) -> DMatrix<f64> {
        match self {
            Self::Polynomial(p) => p.jacobian(x),
            Self::Custom { n, f, .. } => {
                let cols: Vec<DVector<f64>> = (0..*n)
                    .map(|j| {
                        let (mut xp, mut xm) = (x.clone(), x.clone());
                        xp[j] += FACTOR_FD_STEP;
                        xm[j] -= FACTOR_FD_STEP;
                        (f(&xp) - f(&xm)) / (2.0 * FACTOR_FD_STEP)
                    })
                    .collect();
                DMatrix::from_columns(&cols)
            }
        }
    }
}

/// Unit-speed plane curves `t ↦ (a(t), b(t))` with `a'' , b''` known.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "camelCase")]
pub enum PlaneCurve {
    /// Circle of radius `r` through the origin, tangent to the first axis.
    Circle { radius: f64 },
}

impl PlaneCurve {
    pub fn point(&self, t: f64) -> (f64, f64) {
        match *self {
            Self::Circle { radius: r } => (r * (t / r).sin(), r * (1.0 - (t / r).cos())),
        }
    }

    pub fn velocity(&self, t: f64) -> (f64, f64) {
        match *self {
            Self::Circle { radius: r } => ((t / r).cos(), (t / r).sin()),
        }
    }

    pub fn acceleration(&self, t: f64) -> (f64, f64) {
        match *self {
            Self::Circle { radius: r } => (-(t / r).sin() / r, (t / r).cos() / r),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn derivatives_match_fd() {
        let p = PolynomialMap::new(
            2,
            3,
            vec![
                PolyTerm { powers: vec![1, 0], coef: vec![1.0, 0.0, 0.5] },
                PolyTerm { powers: vec![2, 1], coef: vec![0.0, 2.0, -1.0] },
                PolyTerm { powers: vec![0, 3], coef: vec![0.3, 0.0, 1.0] },
            ],
        )
        .unwrap();
        let x = DVector::from_vec(vec![0.3, -0.7]);
        let fd = FactorMap::custom(2, 3, {
            let p = p.clone();
            move |y| p.eval(y)
        });
        assert!((p.jacobian(&x) - fd.jacobian(&x)).amax() < 1e-8);
        let h = 1e-5;
        let hs = p.hessians(&x);
        for k in 0..2 {
            let (mut xp, mut xm) = (x.clone(), x.clone());
            xp[k] += h;
            xm[k] -= h;
            let col = (p.jacobian(&xp) - p.jacobian(&xm)) / (2.0 * h);
            for j in 0..2 {
                assert!((&hs[j][k] - col.column(j)).amax() < 1e-8);
            }
        }
    }

    #[test]
    fn graph_stacks_identity_and_height() {
        let h = PolynomialMap::new(2, 1, vec![PolyTerm { powers: vec![1, 1], coef: vec![1.0] }]).unwrap();
        let g = PolynomialMap::graph(&h);
        let v = g.eval(&DVector::from_vec(vec![2.0, 3.0]));
        assert_eq!(v.as_slice(), &[2.0, 3.0, 6.0]);
    }

    #[test]
    fn circle_is_unit_speed() {
        let c = PlaneCurve::Circle { radius: 2.0 };
        for t in [0.0, 0.4, 1.3] {
            let (a, b) = c.velocity(t);
            assert!((a * a + b * b - 1.0).abs() < 1e-15);
            let (x, y) = c.point(t);
            assert!((x * x + (y - 2.0) * (y - 2.0) - 4.0).abs() < 1e-12);
        }
    }
}
