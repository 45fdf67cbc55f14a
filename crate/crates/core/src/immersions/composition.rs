//! Warped products of immersions `Ψ ∘ (f₀ × … × f_k)` and compositions with
//! an outer isometric immersion.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::{fundamental_forms, FactorMap, ImmersionError, NumericalImmersion, PlaneCurve, PolynomialMap};
use crate::forms::InnerSpace;
use crate::spaceforms::{FactorChart, SpaceForm, WarpedRepresentation};
use crate::warped::{FactorMetric, Monomial, WarpedMetricSpec, Warping};

/// Step for Jacobians of the exponential factor charts.
const CHART_FD_STEP: f64 = 1e-5;

/// `f = Ψ ∘ (f₀ × … × f_k)` for a warped representation `Ψ` and factor maps
/// `fᵢ` into the chart coordinates of its factors.
#[derive(Debug, Clone)]
pub struct WarpedComposition {
    pub rep: WarpedRepresentation,
    pub maps: Vec<FactorMap>,
}

impl WarpedComposition {
    pub fn new(rep: WarpedRepresentation, maps: Vec<FactorMap>) -> Result<Self, ImmersionError> {
        let dims = rep.dims();
        if maps.len() != dims.len() {
            return Err(ImmersionError::DimensionMismatch { expected: dims.len(), got: maps.len() });
        }
        for (i, (m, &d)) in maps.iter().zip(&dims).enumerate() {
            if m.m() != d {
                return Err(ImmersionError::FactorTargetMismatch { factor: i, expected: d, got: m.m() });
            }
        }
        Ok(Self { rep, maps })
    }

    /// Domain dimensions `n₀, …, n_k`.
    pub fn dims(&self) -> Vec<usize> {
        self.maps.iter().map(|m| m.n()).collect()
    }

    pub fn n(&self) -> usize {
        self.dims().iter().sum()
    }

    /// Chart coordinate groups `0..n₀`, `n₀..n₀+n₁`, …
    pub fn groups(&self) -> Vec<Vec<usize>> {
        let mut at = 0;
        self.dims()
            .into_iter()
            .map(|d| {
                let g: Vec<usize> = (at..at + d).collect();
                at += d;
                g
            })
            .collect()
    }

    pub fn split(&self, x: &DVector<f64>) -> Vec<DVector<f64>> {
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

    /// Representation chart coordinates `(f₀(x₀), …, f_k(x_k))`.
    pub fn chart_coords(&self, x: &DVector<f64>) -> DVector<f64> {
        let parts: Vec<DVector<f64>> = self.split(x).iter().zip(&self.maps).map(|(xi, m)| m.eval(xi)).collect();
        let total: usize = parts.iter().map(|p| p.len()).sum();
        let mut out = DVector::zeros(total);
        let mut at = 0;
        for p in parts {
            out.rows_mut(at, p.len()).copy_from(&p);
            at += p.len();
        }
        out
    }

    pub fn immersion(&self) -> NumericalImmersion {
        let this = self.clone();
        NumericalImmersion::new(self.n(), self.rep.form, move |x| {
            if x.len() != this.n() {
                return Err(ImmersionError::DimensionMismatch { expected: this.n(), got: x.len() });
            }
            this.rep.psi_chart(&this.chart_coords(x)).map_err(|e| ImmersionError::OutOfDomain(e.to_string()))
        })
    }

    /// Ambient image `Pᵢ(xᵢ)` of factor `i` alone, inside its umbilical leaf through `q`.
    pub fn factor_point(&self, i: usize, xi: &DVector<f64>) -> DVector<f64> {
        self.rep.factor_chart(i).point(&self.maps[i].eval(xi))
    }

    pub fn factor_immersion(&self, i: usize) -> NumericalImmersion {
        let this = self.clone();
        NumericalImmersion::new(self.maps[i].n(), self.rep.form, move |xi| Ok(this.factor_point(i, xi)))
    }

    /// `ρᵢ(x₀) = σᵢ(P₀(x₀))` for `i = 1..=k`.
    pub fn rho(&self, x0: &DVector<f64>) -> Vec<f64> {
        let p0 = self.factor_point(0, x0);
        (1..=self.rep.k()).map(|i| self.rep.sigma_raw(i, &p0)).collect()
    }

    /// Warping `ρᵢ` as a function of the base coordinates. Exact polynomial
    /// when `c = 0` and `f₀` is polynomial; otherwise evaluated pointwise.
    pub fn warping(&self, i: usize) -> Warping {
        let n0 = self.maps[0].n();
        if let (0.0, FactorMap::Polynomial(p)) = (self.rep.c(), &self.maps[0]) {
            // σ = 1 + ⟨T₀ v, a⟩ along the flat base chart
            let w = self.rep.frames[0].transpose() * &self.rep.a[i - 1];
            let mut terms = vec![Monomial { coef: 1.0, powers: vec![0; n0] }];
            for t in &p.terms {
                let coef: f64 = t.coef.iter().zip(w.iter()).map(|(c, wi)| c * wi).sum();
                if coef != 0.0 {
                    terms.push(Monomial { coef, powers: t.powers.clone() });
                }
            }
            return Warping::Polynomial { dim: n0, terms };
        }
        let this = self.clone();
        Warping::custom(n0, move |x0| this.rho(x0)[i - 1])
    }

    /// Unwarped metric `gᵢ = Dfᵢᵀ Mᵢ(fᵢ) Dfᵢ` of factor `i`, with `Mᵢ` the chart metric.
    pub fn factor_metric(&self, i: usize) -> FactorMetric {
        let chart = self.rep.factor_chart(i);
        let map = self.maps[i].clone();
        FactorMetric::custom(move |xi| {
            let d = map.jacobian(xi);
            d.transpose() * chart.metric(&map.eval(xi)) * d
        })
    }

    /// The warped metric that `f` should pull back.
    pub fn warped_spec(&self) -> Result<WarpedMetricSpec, ImmersionError> {
        let factors = (0..self.maps.len()).map(|i| (self.maps[i].n(), self.factor_metric(i))).collect();
        let warpings = (1..self.maps.len()).map(|i| self.warping(i)).collect();
        Ok(WarpedMetricSpec::new(factors, warpings)?)
    }
}

fn chart_jacobian(chart: &FactorChart, v: &DVector<f64>) -> DMatrix<f64> {
    let cols: Vec<DVector<f64>> = (0..v.len())
        .map(|j| {
            let (mut vp, mut vm) = (v.clone(), v.clone());
            vp[j] += CHART_FD_STEP;
            vm[j] -= CHART_FD_STEP;
            (chart.point(&vp) - chart.point(&vm)) / (2.0 * CHART_FD_STEP)
        })
        .collect();
    DMatrix::from_columns(&cols)
}

/// Orthonormal basis (in a pairing positive on the span) of the columns of `m`.
fn orthonormal_span(amb: &InnerSpace, m: &DMatrix<f64>) -> Vec<DVector<f64>> {
    let scale = m.amax().max(f64::MIN_POSITIVE);
    let mut out: Vec<DVector<f64>> = Vec::new();
    for c in m.column_iter() {
        let mut r = c.into_owned();
        for _ in 0..2 {
            for b in &out {
                r -= b * amb.pair(&r, b);
            }
        }
        let s = amb.pair(&r, &r);
        if s > (1e-8 * scale).powi(2) {
            out.push(r / s.sqrt());
        }
    }
    out
}

fn project(amb: &InnerSpace, basis: &[DVector<f64>], v: &DVector<f64>) -> DVector<f64> {
    let mut out = DVector::zeros(v.len());
    for b in basis {
        out += b * amb.pair(v, b);
    }
    out
}

/// Residuals of the warped α formula, one per sample.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct NolkerCheck {
    pub max_residual: f64,
    pub per_sample: Vec<f64>,
    /// Largest mixed-block entry of the direct `α`.
    pub max_mixed: f64,
}

/// Compares the second fundamental form of `Ψ ∘ (f₀ × … × f_k)` computed
/// directly with the one assembled from the factors:
/// `α(X,Y) = Ψ_*(γ(X,Y)) + Σⱼ σⱼ α^{fⱼ}(Xⱼ,Yⱼ)` with
/// `γ = α^{f₀}(X₀,Y₀) − Σⱼ ρⱼ gⱼ(Xⱼ,Yⱼ)(grad σⱼ)^⊥`, where `⊥` is the part
/// normal to `f₀` inside the base leaf and `gⱼ` the unwarped factor metric.
pub fn nolker_alpha_check(comp: &WarpedComposition, samples: &[DVector<f64>]) -> Result<NolkerCheck, ImmersionError> {
    let rep = &comp.rep;
    let amb = rep.ambient();
    let f = comp.immersion();
    let k = rep.k();
    let groups = comp.groups();
    let mut per_sample = Vec::with_capacity(samples.len());
    let mut max_mixed: f64 = 0.0;
    for x in samples {
        let data = match fundamental_forms(&f, x) {
            Ok((_, d)) => Some(d),
            Err(ImmersionError::NoNormalSpace) => None,
            Err(e) => return Err(e),
        };
        if let Some(d) = &data {
            max_mixed = max_mixed.max(d.mixed_residual(&groups));
        }
        let parts = comp.split(x);
        let mut points = Vec::with_capacity(k + 1);
        let mut leaf = Vec::with_capacity(k + 1);
        let mut tangent = Vec::with_capacity(k + 1);
        let mut factor_alpha = Vec::with_capacity(k + 1);
        let mut factor_jac = Vec::with_capacity(k + 1);
        for i in 0..=k {
            let chart = rep.factor_chart(i);
            let v = comp.maps[i].eval(&parts[i]);
            points.push(chart.point(&v));
            let cj = chart_jacobian(&chart, &v);
            let pj = &cj * comp.maps[i].jacobian(&parts[i]);
            leaf.push(orthonormal_span(&amb, &cj));
            tangent.push(orthonormal_span(&amb, &pj));
            let second = comp.factor_immersion(i).fd_second_derivatives(&parts[i], f.steps.second)?;
            let (li, ti) = (&leaf[i], &tangent[i]);
            let table: Vec<Vec<DVector<f64>>> = second
                .iter()
                .map(|row| row.iter().map(|h| project(&amb, li, h) - project(&amb, ti, h)).collect())
                .collect();
            factor_alpha.push(table);
            factor_jac.push(pj);
        }
        let p0 = &points[0];
        let sigma: Vec<f64> = (1..=k).map(|j| rep.sigma_raw(j, p0)).collect();
        let psi_base = |w: &DVector<f64>| {
            let mut out = w.clone();
            for j in 1..=k {
                out += (&points[j] - &rep.q) * amb.pair(&rep.a[j - 1], w);
            }
            out
        };
        let xi: Vec<DVector<f64>> = (1..=k)
            .map(|j| {
                let a = &rep.a[j - 1];
                project(&amb, &leaf[0], a) - project(&amb, &tangent[0], a)
            })
            .collect();
        let mut worst: f64 = 0.0;
        for (gi, g) in groups.iter().enumerate() {
            for (ai, &u) in g.iter().enumerate() {
                for (bi, &v) in g.iter().enumerate().skip(ai) {
                    let (mut eu, mut ev) = (DVector::zeros(x.len()), DVector::zeros(x.len()));
                    eu[u] = 1.0;
                    ev[v] = 1.0;
                    let lhs = data.as_ref().map_or_else(|| DVector::zeros(rep.q.len()), |d| d.alpha_vector(&eu, &ev));
                    let rhs = if gi == 0 {
                        psi_base(&factor_alpha[0][ai][bi])
                    } else {
                        let j = gi;
                        let pj = &factor_jac[j];
                        let gj = amb.pair(&pj.column(ai).into_owned(), &pj.column(bi).into_owned());
                        &factor_alpha[j][ai][bi] * sigma[j - 1] - psi_base(&(&xi[j - 1] * (sigma[j - 1] * gj)))
                    };
                    worst = worst.max((lhs - rhs).amax());
                }
            }
        }
        per_sample.push(worst);
    }
    let max_residual = per_sample.iter().copied().fold(0.0, f64::max);
    Ok(NolkerCheck { max_residual, per_sample, max_mixed })
}

/// Outer isometric immersions of an open set of `Rᴹ` into a flat space.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "camelCase")]
pub enum OuterMap {
    /// `y ↦ Ly + b` with orthonormal columns of `L` (row-major, `out × in`).
    LinearInclusion { dim_in: usize, dim_out: usize, matrix: Vec<f64>, offset: Vec<f64> },
    /// Cylinder `Rᴹ → Rᴹ⁺¹` over a unit-speed plane curve in the
    /// `(y_axis, y_M)` plane.
    Cylinder { dim_in: usize, axis: usize, curve: PlaneCurve },
}

impl OuterMap {
    pub fn dim_in(&self) -> usize {
        match self {
            Self::LinearInclusion { dim_in, .. } | Self::Cylinder { dim_in, .. } => *dim_in,
        }
    }

    pub fn dim_out(&self) -> usize {
        match self {
            Self::LinearInclusion { dim_out, .. } => *dim_out,
            Self::Cylinder { dim_in, .. } => dim_in + 1,
        }
    }

    fn validate(&self) -> Result<(), ImmersionError> {
        match self {
            Self::LinearInclusion { dim_in, dim_out, matrix, offset } => {
                if matrix.len() != dim_in * dim_out || offset.len() != *dim_out {
                    return Err(ImmersionError::Invalid("linear inclusion data has the wrong size".into()));
                }
                let l = DMatrix::from_row_slice(*dim_out, *dim_in, matrix);
                let defect = (l.transpose() * &l - DMatrix::identity(*dim_in, *dim_in)).amax();
                if defect > 1e-10 {
                    return Err(ImmersionError::Invalid(format!("linear inclusion is not isometric: defect {defect:e}")));
                }
            }
            Self::Cylinder { dim_in, axis, .. } => {
                if axis >= dim_in {
                    return Err(ImmersionError::Invalid(format!("cylinder axis {axis} outside R^{dim_in}")));
                }
            }
        }
        Ok(())
    }

    pub fn eval(&self, y: &DVector<f64>) -> DVector<f64> {
        match self {
            Self::LinearInclusion { dim_in, dim_out, matrix, offset } => {
                DMatrix::from_row_slice(*dim_out, *dim_in, matrix) * y + DVector::from_column_slice(offset)
            }
            Self::Cylinder { dim_in, axis, curve } => {
                let mut out = y.clone().resize_vertically(dim_in + 1, 0.0);
                let (a, b) = curve.point(y[*axis]);
                out[*axis] = a;
                out[*dim_in] = b;
                out
            }
        }
    }

    pub fn jacobian(&self, y: &DVector<f64>) -> DMatrix<f64> {
        match self {
            Self::LinearInclusion { dim_in, dim_out, matrix, .. } => DMatrix::from_row_slice(*dim_out, *dim_in, matrix),
            Self::Cylinder { dim_in, axis, curve } => {
                let mut j = DMatrix::identity(dim_in + 1, *dim_in);
                let (a, b) = curve.velocity(y[*axis]);
                j[(*axis, *axis)] = a;
                j[(*dim_in, *axis)] = b;
                j
            }
        }
    }

    /// `D²g(u, v)`.
    pub fn second(&self, y: &DVector<f64>, u: &DVector<f64>, v: &DVector<f64>) -> DVector<f64> {
        let mut out = DVector::zeros(self.dim_out());
        if let Self::Cylinder { dim_in, axis, curve } = self {
            let (a, b) = curve.acceleration(y[*axis]);
            let s = u[*axis] * v[*axis];
            out[*axis] = a * s;
            out[*dim_in] = b * s;
        }
        out
    }
}

/// `g ∘ f` for a flat-ambient immersion `f` and an outer map `g`.
pub fn make_composition(f: &NumericalImmersion, g: &OuterMap) -> Result<NumericalImmersion, ImmersionError> {
    if f.space().c != 0.0 {
        return Err(ImmersionError::DomainMismatch(format!("outer maps act on flat ambients, got c = {}", f.space().c)));
    }
    if f.space().ambient_dim() != g.dim_in() {
        return Err(ImmersionError::DomainMismatch(format!(
            "immersion lands in R^{} but the outer map starts from R^{}",
            f.space().ambient_dim(),
            g.dim_in()
        )));
    }
    g.validate()?;
    let (inner, outer) = (f.clone(), g.clone());
    let eval = move |x: &DVector<f64>| Ok(outer.eval(&inner.point(x)?));
    let (inner, outer) = (f.clone(), g.clone());
    let jac = move |x: &DVector<f64>| match (inner.point(x), inner.jacobian(x)) {
        (Ok(y), Ok(j)) => outer.jacobian(&y) * j,
        _ => DMatrix::from_element(outer.dim_out(), inner.n(), f64::NAN),
    };
    let mut out = NumericalImmersion::new(f.n(), SpaceForm::new(0.0, g.dim_out()), eval).with_jacobian(jac);
    out.steps = f.steps;
    if f.has_oracles().1 {
        let (inner, outer) = (f.clone(), g.clone());
        out = out.with_hessian(move |x| {
            let n = inner.n();
            let (Ok(y), Ok(j), Ok(h)) = (inner.point(x), inner.jacobian(x), inner.second_derivatives(x)) else {
                return vec![vec![DVector::from_element(outer.dim_out(), f64::NAN); n]; n];
            };
            let dg = outer.jacobian(&y);
            (0..n)
                .map(|a| {
                    (0..n)
                        .map(|b| &dg * &h[a][b] + outer.second(&y, &j.column(a).into_owned(), &j.column(b).into_owned()))
                        .collect()
                })
                .collect()
        });
    }
    Ok(out)
}

/// Built-in warped compositions.
pub mod builtin {
    use super::*;
    use crate::immersions::PolyTerm;
    use crate::spaceforms::builtin as reps;

    fn e(n: usize, i: usize) -> DVector<f64> {
        let mut v = DVector::zeros(n);
        v[i] = 1.0;
        v
    }

    fn curve(coefs: &[(u32, [f64; 2])]) -> PolynomialMap {
        PolynomialMap::new(1, 2, coefs.iter().map(|(p, c)| PolyTerm { powers: vec![*p], coef: c.to_vec() }).collect())
            .expect("valid")
    }

    /// Rotation of a profile `t ↦ (r(t) − 1, h(t))` in the base plane of
    /// `R^{2+m₁} = R² ×_σ S^{m₁}`, `σ = 1 + v₀`: the hypersurface of
    /// revolution with radius `r(t)`.
    pub fn revolution(profile: PolynomialMap, m1: usize) -> Result<WarpedComposition, ImmersionError> {
        let n = 2 + m1;
        let frames = vec![
            DMatrix::from_columns(&[e(n, 0), e(n, 1)]),
            DMatrix::from_columns(&(2..n).map(|i| e(n, i)).collect::<Vec<_>>()),
        ];
        let rep = WarpedRepresentation::with_frames(0.0, DVector::zeros(n), frames, vec![-e(n, 0)], 1e-12)?;
        WarpedComposition::new(rep, vec![FactorMap::Polynomial(profile), FactorMap::identity(m1)])
    }

    /// A surface of revolution in `R³` with radius `1 + 0.3t + 0.2t²` and
    /// height `t − 0.1t³`.
    pub fn revolution_surface() -> WarpedComposition {
        revolution(curve(&[(1, [0.3, 1.0]), (2, [0.2, 0.0]), (3, [0.0, -0.1])]), 1).expect("valid")
    }

    /// `R^{m₀} ×_{ρ₁} S^{m₁} ×_{ρ₂} …` in flat space with `zᵢ = −λᵢ e_{i−1}`
    /// and `f₀` the graph of `h` over `R^{m₀−1}`.
    pub fn flat_rotations(base_height: PolynomialMap, lambdas: &[f64], sphere_dims: &[usize]) -> Result<WarpedComposition, ImmersionError> {
        let m0 = base_height.n + base_height.m;
        let m: usize = m0 + sphere_dims.iter().sum::<usize>();
        if lambdas.len() != sphere_dims.len() || lambdas.len() > m0 {
            return Err(ImmersionError::Invalid("one λ per sphere factor, at most m₀ of them".into()));
        }
        let mut frames = vec![DMatrix::from_columns(&(0..m0).map(|i| e(m, i)).collect::<Vec<_>>())];
        let mut at = m0;
        for &d in sphere_dims {
            frames.push(DMatrix::from_columns(&(at..at + d).map(|i| e(m, i)).collect::<Vec<_>>()));
            at += d;
        }
        let z = lambdas.iter().enumerate().map(|(i, &l)| -e(m, i) * l).collect();
        let rep = WarpedRepresentation::with_frames(0.0, DVector::zeros(m), frames, z, 1e-12)?;
        let mut maps = vec![FactorMap::Polynomial(PolynomialMap::graph(&base_height))];
        maps.extend(sphere_dims.iter().map(|&d| FactorMap::identity(d)));
        WarpedComposition::new(rep, maps)
    }

    /// `S³` as a warped product of an arc and two circles, all factor maps
    /// identities: `f = Ψ` itself.
    pub fn clifford_identity() -> WarpedComposition {
        WarpedComposition::new(reps::clifford(), vec![FactorMap::identity(1), FactorMap::identity(1), FactorMap::identity(1)])
            .expect("valid")
    }

    /// `S⁵ ⊃ S² ×_{σ₁} S² ×_{σ₂} S¹` (`z₁ = e₀ = −z₂`) with a curve in the
    /// base, a curve in the first factor and the identity on the circle.
    pub fn clifford_curves() -> WarpedComposition {
        let n = 6;
        let rep = WarpedRepresentation::new(1.0, e(n, n - 1), &[2, 2, 1], vec![e(n, 0), -e(n, 0)], 1e-12).expect("valid");
        let base = curve(&[(1, [0.2, 0.9]), (2, [0.3, 0.0])]);
        let fiber = curve(&[(1, [1.0, 0.1]), (2, [0.0, 0.5]), (3, [-0.2, 0.0])]);
        WarpedComposition::new(rep, vec![FactorMap::Polynomial(base), FactorMap::Polynomial(fiber), FactorMap::identity(1)])
            .expect("valid")
    }

    /// A curve in the base `S²` of `S^{2+m₁} = S² ×_σ S^{m₁}` (`z = t e₀`),
    /// rotated: a hypersurface of `S^{2+m₁}`.
    pub fn sphere_rotation_hypersurface(m1: usize, t: f64) -> WarpedComposition {
        let n = 3 + m1;
        let rep = WarpedRepresentation::new(1.0, e(n, n - 1), &[2, m1], vec![e(n, 0) * t], 1e-12).expect("valid");
        let profile = curve(&[(1, [0.4, 1.0]), (2, [0.3, 0.0]), (3, [0.0, -0.2])]);
        WarpedComposition::new(rep, vec![FactorMap::Polynomial(profile), FactorMap::identity(m1)]).expect("valid")
    }

    /// Two horosphere factors with equal warping over a curve in `H²`.
    pub fn horosphere_pair(m1: usize, m2: usize) -> WarpedComposition {
        let n = 3 + m1 + m2;
        let rep = WarpedRepresentation::new(-1.0, e(n, 0), &[2, m1, m2], vec![e(n, 1), e(n, 1)], 1e-12).expect("valid");
        let profile = curve(&[(1, [0.5, 0.8]), (2, [0.2, -0.1])]);
        WarpedComposition::new(rep, vec![FactorMap::Polynomial(profile), FactorMap::identity(m1), FactorMap::identity(m2)])
            .expect("valid")
    }

    /// Product of two graph hypersurfaces `R^{m₀−1} → R^{m₀}` and
    /// `R^{m₁−1} → R^{m₁}` in `R^{m₀+m₁}` (constant warping).
    pub fn product_of_graphs(h0: PolynomialMap, h1: PolynomialMap) -> Result<WarpedComposition, ImmersionError> {
        let (m0, m1) = (h0.n + h0.m, h1.n + h1.m);
        let rep = reps::flat_product(m0, m1);
        WarpedComposition::new(rep, vec![FactorMap::Polynomial(PolynomialMap::graph(&h0)), FactorMap::Polynomial(PolynomialMap::graph(&h1))])
    }
}
