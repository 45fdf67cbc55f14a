//! Recovery of a (warped) product structure from an immersion.
//!
//! Pipeline, on a product chart whose coordinate groups are the candidate
//! factors:
//!
//! 1. the nullity hypothesis `ν_s < n − 2s` is checked at every sample;
//! 2. chart coordinates are grouped by the coupling graph of `α` and of the
//!    pullback metric (an edge whenever either is nonzero at some sample);
//! 3. warpings are recovered from trace ratios of the diagonal metric blocks,
//!    the base is the set of groups the other blocks depend on, and
//!    proportional warpings are merged;
//! 4. each merged factor is sliced by freezing the other coordinates at a
//!    base point;
//! 5. for every slice, the smallest umbilical leaf containing it is found
//!    and the slice nullities are compared with `ℓ − 2s`.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{fundamental_forms, ImmersionError, NumericalImmersion, SecondFundamentalData};
use crate::forms::{hypothesis_gate, nullity_profile, InnerSpace, NullityConfig, SymmetricBilinearForm};
use crate::linalg;
use crate::splitting::detect_adapted_splitting;
use crate::warped::{group_warping_samples, is_constant, WarpingGroups, CONSTANCY_TOL};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", default)]
pub struct DecomposeConfig {
    /// Nullity settings for the gate and for the slices (finite-difference level `rankTol`).
    pub nullity: NullityConfig,
    /// Skip the pointwise hypothesis gate.
    pub skip_gate: bool,
    /// Relative size of `α(∂ᵤ,∂ᵥ)` above which coordinates are coupled.
    pub adapt_tol: f64,
    /// Relative size of `G(∂ᵤ,∂ᵥ)` above which coordinates are coupled.
    pub metric_tol: f64,
    /// Deviation of a warping ratio from 1 that counts as dependence.
    pub dependency_tol: f64,
    /// Relative residual for merging proportional warpings.
    pub group_tol: f64,
    /// Relative singular-value threshold for affine hulls of slices.
    pub hull_tol: f64,
    /// Declared coordinate groups, checked instead of inferred.
    pub groups: Option<Vec<Vec<usize>>>,
    /// Base point for slices; chart center when absent.
    pub base_point: Option<Vec<f64>>,
    pub seed: u64,
}

impl Default for DecomposeConfig {
    fn default() -> Self {
        Self {
            nullity: NullityConfig { rank_tol: 1e-5, ..NullityConfig::default() },
            skip_gate: false,
            adapt_tol: 1e-5,
            metric_tol: 1e-6,
            dependency_tol: 1e-7,
            group_tol: 1e-6,
            hull_tol: 1e-5,
            groups: None,
            base_point: None,
            seed: 0,
        }
    }
}

/// A non-base coordinate group with its recovered warping.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct WarpedFactorResult {
    pub coords: Vec<usize>,
    /// `ρ(x)/ρ(x*)` at each sample.
    pub rho: Vec<f64>,
    pub constant: bool,
}

/// Slice nullities of one (merged) factor.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct ClaimReport {
    pub coords: Vec<usize>,
    /// Indices into [`DecompositionResult::factors`] merged into this slice.
    pub members: Vec<usize>,
    /// Slice dimension `ℓ`.
    pub ell: usize,
    /// Dimension of the smallest umbilical leaf found around the slice.
    pub leaf_dim: usize,
    /// `true` when the leaf is a round sphere inside a flat ambient.
    pub spherical_leaf: bool,
    pub cod: usize,
    /// Largest `ν_s` over slice points, `s = 1..=cod`.
    pub nullities: Vec<usize>,
    pub holds: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct DecompositionResult {
    pub n: usize,
    pub p: usize,
    pub base_point: Vec<f64>,
    /// Gate values per sample (empty when skipped).
    pub gate_values: Vec<Vec<usize>>,
    /// Blocks found by the frame-level adapted splitting detector per sample.
    pub detected_blocks: Vec<usize>,
    /// Base coordinates (empty for a Riemannian product).
    pub base: Vec<usize>,
    /// Non-base coordinate groups.
    pub factors: Vec<WarpedFactorResult>,
    /// Block dimensions, base first when present.
    pub block_dims: Vec<usize>,
    /// Largest mixed `α` entry across the final blocks.
    pub mixed_residual: f64,
    /// Proportional warpings, indices 1-based into `factors`.
    pub warping_groups: Option<WarpingGroups>,
    /// Codimension of the base slice in its leaf.
    pub base_cod: Option<usize>,
    pub claims: Vec<ClaimReport>,
    /// `Σ cod` over the base and the merged factors.
    pub cod_sum: usize,
}

impl DecompositionResult {
    pub fn claims_hold(&self) -> bool {
        self.claims.iter().all(|c| c.holds)
    }
}

fn union_find_groups(n: usize, edges: &[(usize, usize)]) -> Vec<Vec<usize>> {
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(parent: &mut [usize], i: usize) -> usize {
        let mut r = i;
        while parent[r] != r {
            r = parent[r];
        }
        parent[i] = r;
        r
    }
    for &(a, b) in edges {
        let (ra, rb) = (find(&mut parent, a), find(&mut parent, b));
        if ra != rb {
            parent[ra.max(rb)] = ra.min(rb);
        }
    }
    let mut groups: Vec<Vec<usize>> = Vec::new();
    let mut roots: Vec<usize> = Vec::new();
    for i in 0..n {
        let r = find(&mut parent, i);
        match roots.iter().position(|&x| x == r) {
            Some(g) => groups[g].push(i),
            None => {
                roots.push(r);
                groups.push(vec![i]);
            }
        }
    }
    groups
}

fn coupling_edges(data: &SecondFundamentalData, adapt_tol: f64, metric_tol: f64) -> Vec<(usize, usize)> {
    let n = data.gram.nrows();
    let norm = |u: usize, v: usize| (data.gram[(u, u)] * data.gram[(v, v)]).sqrt();
    let entry = |u: usize, v: usize| data.chart_ops.iter().map(|h| h[(u, v)].powi(2)).sum::<f64>().sqrt() / norm(u, v);
    let mut scale: f64 = 0.0;
    for u in 0..n {
        for v in 0..n {
            scale = scale.max(entry(u, v));
        }
    }
    let mut edges = Vec::new();
    for u in 0..n {
        for v in (u + 1)..n {
            if entry(u, v) > adapt_tol * scale.max(1.0) || data.gram[(u, v)].abs() > metric_tol * norm(u, v) {
                edges.push((u, v));
            }
        }
    }
    edges
}

fn with_coords(base: &DVector<f64>, from: &DVector<f64>, coords: &[usize]) -> DVector<f64> {
    let mut out = base.clone();
    for &c in coords {
        out[c] = from[c];
    }
    out
}

fn gram_at(f: &NumericalImmersion, x: &DVector<f64>) -> Result<DMatrix<f64>, ImmersionError> {
    let j = f.jacobian(x)?;
    Ok(f.ambient().gram(&j, &j))
}

fn block_trace(g: &DMatrix<f64>, coords: &[usize]) -> f64 {
    coords.iter().map(|&c| g[(c, c)]).sum()
}

/// `ρ(y)/ρ(x*)` for the group `coords` at `y` (group coordinates reset to `x*`).
fn warping_ratio(f: &NumericalImmersion, star: &DVector<f64>, star_trace: f64, y: &DVector<f64>, coords: &[usize]) -> Result<f64, ImmersionError> {
    let z = with_coords(y, star, coords);
    Ok((block_trace(&gram_at(f, &z)?, coords) / star_trace).sqrt())
}

/// Slice `u ↦ f(x* with coords := u)` as an immersion of its own.
pub fn factor_slice(f: &NumericalImmersion, star: &DVector<f64>, coords: &[usize]) -> NumericalImmersion {
    let (f2, star, coords2) = (f.clone(), star.clone(), coords.to_vec());
    NumericalImmersion::new(coords.len(), f.space(), move |u| {
        let mut x = star.clone();
        for (i, &c) in coords2.iter().enumerate() {
            x[c] = u[i];
        }
        f2.point(&x)
    })
    .with_steps(f.steps)
}

/// Basis (Euclidean coordinates, columns) of `{v ∈ span(b) : ⟨v, w⟩ = 0}`.
fn kernel_in(amb: &InnerSpace, b: &DMatrix<f64>, w: &DVector<f64>) -> DMatrix<f64> {
    let row = (b.transpose() * (amb.metric() * w)).transpose();
    let scale = row.amax();
    if scale == 0.0 {
        return b.clone();
    }
    let k = linalg::kernel_basis(&DMatrix::from_row_slice(1, row.len(), row.as_slice()), 1e-12 * scale);
    b * k
}

/// Gram–Schmidt in the ambient pairing, dropping residuals of norm below `abs_tol`.
fn pair_orthonormal(amb: &InnerSpace, cols: &[DVector<f64>], abs_tol: f64) -> Vec<DVector<f64>> {
    let mut out: Vec<DVector<f64>> = Vec::new();
    for c in cols {
        let mut r = c.clone();
        for _ in 0..2 {
            for b in &out {
                r -= b * amb.pair(&r, b);
            }
        }
        let s = amb.pair(&r, &r);
        if s > abs_tol * abs_tol {
            out.push(r / s.sqrt());
        }
    }
    out
}

/// Leaf data of a slice: dimension, whether spherical, and the
/// constraint normal at a point (position for `c ≠ 0`, radius for spheres).
struct Leaf {
    dir: DMatrix<f64>,
    spherical: bool,
    center: Option<DVector<f64>>,
}

fn find_leaf(g: &NumericalImmersion, points: &[DVector<f64>], hull_tol: f64) -> Result<Leaf, ImmersionError> {
    let amb = g.ambient();
    let images: Vec<DVector<f64>> = points.iter().map(|u| g.point(u)).collect::<Result<_, _>>()?;
    let jacs: Vec<DMatrix<f64>> = points.iter().map(|u| g.jacobian(u)).collect::<Result<_, _>>()?;
    let mut cols: Vec<DVector<f64>> = Vec::new();
    for (img, jac) in images.iter().zip(&jacs) {
        cols.push(img - &images[0]);
        cols.extend(jac.column_iter().map(|c| c.into_owned()));
    }
    for u in points.iter().take(3) {
        let h = g.second_derivatives(u)?;
        for (i, row) in h.iter().enumerate() {
            cols.extend(row.iter().skip(i).cloned());
        }
    }
    let m = DMatrix::from_columns(&cols);
    let top = linalg::spectral_norm(&m);
    let dir = linalg::range_basis(&m, hull_tol * top);
    if g.space().c != 0.0 || dir.ncols() < 2 {
        return Ok(Leaf { dir, spherical: false, center: None });
    }
    // sphere inside the hull: 2⟨u,o⟩ + s = |u|² at points, ⟨t,o⟩ = ⟨t,u⟩ along tangents
    let d = dir.ncols();
    let local = |v: &DVector<f64>| dir.transpose() * (v - &images[0]);
    let mut rows: Vec<Vec<f64>> = Vec::new();
    let mut rhs: Vec<f64> = Vec::new();
    for (img, jac) in images.iter().zip(&jacs) {
        let u = local(img);
        let mut r: Vec<f64> = (u.iter().map(|x| 2.0 * x)).collect();
        r.push(1.0);
        rows.push(r);
        rhs.push(u.norm_squared());
        for t in jac.column_iter() {
            let t = dir.transpose() * t;
            let mut r: Vec<f64> = t.iter().copied().collect();
            r.push(0.0);
            rows.push(r);
            rhs.push(t.dot(&u));
        }
    }
    let a = DMatrix::from_fn(rows.len(), d + 1, |i, j| rows[i][j]);
    let b = DVector::from_vec(rhs);
    let svd = linalg::svd(&a);
    let sol = svd.solve(&b, 1e-12).map_err(|e| ImmersionError::Invalid(e.to_string()))?;
    let residual = (&a * &sol - &b).amax();
    let spread = images.iter().fold(0.0f64, |m, v| m.max((v - &images[0]).norm()));
    let full_rank = linalg::rank(&a, 1e-9 * linalg::spectral_norm(&a)) == d + 1;
    if full_rank && residual <= 1e-7 * (1.0 + spread * spread) {
        let o = sol.rows(0, d).into_owned();
        let radius_sq = sol[d] + o.norm_squared();
        if radius_sq > 0.0 {
            let _ = amb;
            return Ok(Leaf { center: Some(&images[0] + &dir * o), dir, spherical: true });
        }
    }
    Ok(Leaf { dir, spherical: false, center: None })
}

/// Normal space of the slice inside its leaf at `u`, as orthonormal ambient vectors.
fn leaf_normals(g: &NumericalImmersion, leaf: &Leaf, u: &DVector<f64>) -> Result<(Vec<DVector<f64>>, usize), ImmersionError> {
    let amb = g.ambient();
    let y = g.point(u)?;
    let tq = if g.space().c != 0.0 {
        kernel_in(&amb, &leaf.dir, &y)
    } else if let Some(o) = &leaf.center {
        kernel_in(&amb, &leaf.dir, &(&y - o))
    } else {
        leaf.dir.clone()
    };
    let leaf_dim = tq.ncols();
    let tq_basis = pair_orthonormal(&amb, &tq.column_iter().map(|c| c.into_owned()).collect::<Vec<_>>(), 1e-10);
    let jac = g.jacobian(u)?;
    let tangent = pair_orthonormal(&amb, &jac.column_iter().map(|c| c.into_owned()).collect::<Vec<_>>(), 1e-8);
    let residuals: Vec<DVector<f64>> = tq_basis
        .iter()
        .map(|v| {
            let mut r = v.clone();
            for t in &tangent {
                r -= t * amb.pair(v, t);
            }
            r
        })
        .collect();
    Ok((pair_orthonormal(&amb, &residuals, 1e-6), leaf_dim))
}

fn slice_form(g: &NumericalImmersion, u: &DVector<f64>, normals: &[DVector<f64>]) -> Result<SymmetricBilinearForm, ImmersionError> {
    let amb = g.ambient();
    let l = g.n();
    let jac = g.jacobian(u)?;
    let gram = amb.gram(&jac, &jac);
    let c = linalg::inv_sqrt_spd(&((&gram + gram.transpose()) * 0.5)).ok_or(ImmersionError::RankDeficientJacobian { rank: l - 1, n: l })?;
    let h = g.second_derivatives(u)?;
    let ops = normals
        .iter()
        .map(|nu| {
            let m = DMatrix::from_fn(l, l, |i, j| amb.pair(&h[i][j], nu));
            let a = c.transpose() * ((&m + m.transpose()) * 0.5) * &c;
            (&a + a.transpose()) * 0.5
        })
        .collect();
    Ok(SymmetricBilinearForm::new(ops, 1e-12)?)
}

/// Slice points: the base point and the projections of the samples.
fn slice_points(star: &DVector<f64>, samples: &[DVector<f64>], coords: &[usize]) -> Vec<DVector<f64>> {
    let pick = |x: &DVector<f64>| DVector::from_iterator(coords.len(), coords.iter().map(|&c| x[c]));
    std::iter::once(pick(star)).chain(samples.iter().map(pick)).collect()
}

fn claim(
    f: &NumericalImmersion,
    star: &DVector<f64>,
    samples: &[DVector<f64>],
    coords: &[usize],
    members: Vec<usize>,
    config: &DecomposeConfig,
) -> Result<ClaimReport, ImmersionError> {
    let g = factor_slice(f, star, coords);
    let points = slice_points(star, samples, coords);
    let leaf = find_leaf(&g, &points, config.hull_tol)?;
    let ell = coords.len();
    let mut cod = 0;
    let mut leaf_dim = 0;
    let mut nullities: Vec<usize> = Vec::new();
    for u in &points {
        let (normals, dim) = leaf_normals(&g, &leaf, u)?;
        leaf_dim = leaf_dim.max(dim);
        cod = cod.max(normals.len());
        if normals.is_empty() {
            continue;
        }
        let form = slice_form(&g, u, &normals)?;
        let report = nullity_profile(&form, &config.nullity)?;
        if nullities.len() < report.values.len() {
            nullities.resize(report.values.len(), 0);
        }
        for (acc, v) in nullities.iter_mut().zip(&report.values) {
            *acc = (*acc).max(*v);
        }
    }
    let holds = nullities.iter().enumerate().all(|(i, &nu)| (nu as i64) < ell as i64 - 2 * (i as i64 + 1));
    Ok(ClaimReport { coords: coords.to_vec(), members, ell, leaf_dim, spherical_leaf: leaf.spherical, cod, nullities, holds })
}

/// Runs the decomposition pipeline on the chart samples.
pub fn decompose(f: &NumericalImmersion, samples: &[DVector<f64>], config: &DecomposeConfig) -> Result<DecompositionResult, ImmersionError> {
    let n = f.n();
    if samples.len() < 2 {
        return Err(ImmersionError::Invalid(format!("{} sample(s), need at least 2", samples.len())));
    }
    if let Some(x) = samples.iter().find(|x| x.len() != n) {
        return Err(ImmersionError::DimensionMismatch { expected: n, got: x.len() });
    }
    let star = match &config.base_point {
        Some(b) if b.len() != n => return Err(ImmersionError::DimensionMismatch { expected: n, got: b.len() }),
        Some(b) => DVector::from_column_slice(b),
        None => DVector::zeros(n),
    };
    let data: Vec<SecondFundamentalData> =
        samples.par_iter().map(|x| fundamental_forms(f, x).map(|(_, d)| d)).collect::<Result<_, _>>()?;
    let p = data[0].form.p();

    // (1) hypothesis gate at every sample
    let mut gate_values = Vec::new();
    if !config.skip_gate {
        if 2 * p >= n {
            return Err(ImmersionError::CodimensionTooLarge { n, p });
        }
        let outcomes: Vec<_> =
            data.par_iter().map(|d| hypothesis_gate(&d.form, &config.nullity)).collect::<Result<Vec<_>, _>>()?;
        for (point, o) in outcomes.into_iter().enumerate() {
            if let Some(s) = o.violation {
                return Err(ImmersionError::HypothesisViolated { s, point, values: o.values });
            }
            gate_values.push(o.values);
        }
    }
    let detected_blocks = data.iter().map(|d| detect_adapted_splitting(&d.form, config.adapt_tol).blocks().len()).collect();

    // (2) coordinate groups
    let groups = match &config.groups {
        Some(g) => {
            let mut all: Vec<usize> = g.iter().flatten().copied().collect();
            all.sort_unstable();
            if all != (0..n).collect::<Vec<_>>() {
                return Err(ImmersionError::Invalid("declared groups must partition the chart coordinates".into()));
            }
            let residual = data.iter().map(|d| d.mixed_residual(g)).fold(0.0, f64::max);
            if residual > config.adapt_tol {
                return Err(ImmersionError::NotAdapted { residual, tol: config.adapt_tol });
            }
            g.clone()
        }
        None => {
            let edges: Vec<(usize, usize)> =
                data.iter().flat_map(|d| coupling_edges(d, config.adapt_tol, config.metric_tol)).collect();
            union_find_groups(n, &edges)
        }
    };
    let mixed_residual = data.iter().map(|d| d.mixed_residual(&groups)).fold(0.0, f64::max);

    // (3) warpings and base
    let r = groups.len();
    let g_star = gram_at(f, &star)?;
    let traces: Vec<f64> = groups.iter().map(|g| block_trace(&g_star, g)).collect();
    let mut depends = vec![vec![false; r]; r];
    for j in 0..r {
        for l in 0..r {
            if l == j {
                continue;
            }
            for x in samples {
                let y = with_coords(&star, x, &groups[l]);
                let ratio = warping_ratio(f, &star, traces[j], &y, &groups[j])?;
                if (ratio - 1.0).abs() > config.dependency_tol {
                    depends[j][l] = true;
                    break;
                }
            }
        }
    }
    let base_groups: Vec<usize> = (0..r).filter(|&l| (0..r).any(|j| depends[j][l])).collect();
    if let Some(&l) = base_groups.iter().find(|&&l| depends[l].iter().any(|&d| d)) {
        return Err(ImmersionError::NotWarpedProduct(format!("base coordinates {:?} are themselves warped", groups[l])));
    }
    let mut base: Vec<usize> = base_groups.iter().flat_map(|&l| groups[l].clone()).collect();
    base.sort_unstable();
    let mut factors = Vec::new();
    for (j, g) in groups.iter().enumerate() {
        if base_groups.contains(&j) {
            continue;
        }
        let rho: Vec<f64> =
            samples.iter().map(|x| warping_ratio(f, &star, traces[j], x, g)).collect::<Result<_, _>>()?;
        let constant = is_constant(&rho, CONSTANCY_TOL.max(config.dependency_tol));
        factors.push(WarpedFactorResult { coords: g.clone(), rho, constant });
    }
    let mut block_dims = Vec::new();
    if !base.is_empty() {
        block_dims.push(base.len());
    }
    block_dims.extend(factors.iter().map(|w| w.coords.len()));

    let warping_groups = if factors.is_empty() {
        None
    } else {
        let rows: Vec<Vec<f64>> = factors.iter().map(|w| w.rho.clone()).collect();
        Some(group_warping_samples(&rows, config.group_tol)?)
    };

    // (4)–(5) slices and the per-factor nullity claim
    let base_cod = if base.is_empty() {
        None
    } else {
        let g = factor_slice(f, &star, &base);
        let points = slice_points(&star, samples, &base);
        let leaf = find_leaf(&g, &points, config.hull_tol)?;
        Some(leaf_normals(&g, &leaf, &points[0])?.0.len())
    };
    let mut claims = Vec::new();
    if let Some(wg) = &warping_groups {
        for members in &wg.groups {
            let idx: Vec<usize> = members.iter().map(|m| m - 1).collect();
            let mut coords: Vec<usize> = idx.iter().flat_map(|&i| factors[i].coords.clone()).collect();
            coords.sort_unstable();
            claims.push(claim(f, &star, samples, &coords, idx, config)?);
        }
    }
    let cod_sum = base_cod.unwrap_or(0) + claims.iter().map(|c| c.cod).sum::<usize>();
    Ok(DecompositionResult {
        n,
        p,
        base_point: star.iter().copied().collect(),
        gate_values,
        detected_blocks,
        base,
        factors,
        block_dims,
        mixed_residual,
        warping_groups,
        base_cod,
        claims,
        cod_sum,
    })
}

/// Deterministic samples in the box `[−r, r]ⁿ`.
pub fn box_samples(n: usize, count: usize, radius: f64, seed: u64) -> Vec<DVector<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count).map(|_| DVector::from_fn(n, |_, _| rng.random_range(-radius..radius))).collect()
}
