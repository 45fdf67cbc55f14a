//! Subcommand runners. Each reads its instance document, runs the library
//! under the run configuration and returns a [`Report`].

use std::time::Instant;

use nalgebra::DVector;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use super::docs::{
    splitting_from_columns, splitting_from_groups, AnalyzeDoc, CurvatureDoc, DecomposeDoc, FormDoc, LemmaDoc, LemmaDocOut,
    NullityDoc, RepVerifyDoc,
};
use super::oracle::oracle_grassmann_grid;
use super::report::{Report, Verdict};
use super::{read_doc, HarnessError, RunConfig};
use crate::forms::{nullity_profile, NullityConfig, NullityMode, SymmetricBilinearForm};
use crate::immersions::{
    codazzi_residual, decompose, fundamental_forms, nolker_alpha_check, pointwise_nullities, richardson_delta, DecompositionResult,
    WarpedComposition,
};
use crate::spaceforms::pullback_metric;
use crate::splitting::{falsify, lemma_verify, lemma_verify_blocks, LemmaConfig, LemmaReport, Verdict as LemmaVerdict};
use crate::warped::fd_riemann;

/// A subcommand with its arguments.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "name", rename_all = "kebab-case")]
pub enum Command {
    Nullity { file: String },
    Lemma { file: String },
    Falsify { n: usize, p: usize, trials: usize },
    RepVerify { file: String },
    Curvature { file: String },
    Analyze { file: String },
    Decompose { file: String },
    /// Grid oracle against the search, for one `s` or all.
    Oracle { file: String, s: Option<usize> },
}

impl Command {
    pub fn run(&self, config: &RunConfig) -> Result<Report, HarnessError> {
        config.validate()?;
        let start = Instant::now();
        let (items, summary, verdict) = match self {
            Self::Nullity { file } => nullity(file, config)?,
            Self::Lemma { file } => lemma(file, config)?,
            Self::Falsify { n, p, trials } => falsify_cmd(*n, *p, *trials, config)?,
            Self::RepVerify { file } => rep_verify(file, config)?,
            Self::Curvature { file } => curvature(file, config)?,
            Self::Analyze { file } => analyze(file, config)?,
            Self::Decompose { file } => decompose_cmd(file, config)?,
            Self::Oracle { file, s } => oracle(file, *s, config)?,
        };
        let command = serde_json::to_value(self).expect("commands serialize");
        Ok(Report::new(command, config.clone(), items, summary, verdict, start.elapsed()))
    }
}

type Outcome = (Vec<Value>, Value, Verdict);

fn to_value<T: Serialize>(v: &T) -> Value {
    serde_json::to_value(v).expect("results serialize")
}

fn verdict_of(ok: bool) -> Verdict {
    if ok {
        Verdict::Pass
    } else {
        Verdict::Fail
    }
}

fn nullity(file: &str, config: &RunConfig) -> Result<Outcome, HarnessError> {
    let form = read_doc::<FormDoc>(file)?.build()?;
    let report = config.install(|| nullity_profile(&form, &config.nullity()))??;
    let summary = json!({ "values": report.values, "hypothesisOk": report.hypothesis_ok });
    Ok((vec![to_value(&NullityDoc::from(&report))], summary, Verdict::Info))
}

fn lemma(file: &str, config: &RunConfig) -> Result<Outcome, HarnessError> {
    let (form, split, lemma_config) = match read_doc::<LemmaDoc>(file)? {
        LemmaDoc::Form { form, split } => {
            let form = form.build()?;
            let split = splitting_from_columns(form.n(), &split, 1e-9)?;
            (form, split, config.lemma())
        }
        LemmaDoc::Immersion { immersion, point, groups, .. } => {
            let f = immersion.build()?;
            let (_, data) = fundamental_forms(&f, &DVector::from_vec(point))?;
            let split = splitting_from_groups(&data.chart_frame, &groups, config.tol.iso_tol)?;
            // forms from finite differences carry their noise into every threshold
            let lc = LemmaConfig { nullity: config.fd_nullity(), curvature_tol: config.tol.adapt_tol, ..config.lemma() };
            (data.form, split, lc)
        }
    };
    let reports: Vec<LemmaReport> = if split.blocks().len() == 2 {
        vec![lemma_verify(&form, &split, &lemma_config)?]
    } else {
        lemma_verify_blocks(&form, &split, &lemma_config)?
    };
    let verdicts: Vec<LemmaVerdict> = reports.iter().map(|r| r.verdict).collect();
    let verdict = if verdicts.contains(&LemmaVerdict::Violated) {
        Verdict::Fail
    } else if verdicts.iter().all(|v| *v == LemmaVerdict::Holds) {
        Verdict::Pass
    } else {
        Verdict::Info
    };
    let items = reports.iter().map(|r| to_value(&LemmaDocOut::from(r))).collect();
    Ok((items, json!({ "verdicts": verdicts }), verdict))
}

fn falsify_cmd(n: usize, p: usize, trials: usize, config: &RunConfig) -> Result<Outcome, HarnessError> {
    if n == 0 || p == 0 {
        return Err(HarnessError::Input("n and p must be positive".into()));
    }
    let report = config.install(|| falsify(n, p, trials, config.seed, &config.falsify()))?;
    let summary = json!({
        "tested": report.tested,
        "violations": report.violations,
        "maxSNorm": report.max_s_norm(),
        "maxStepResidual": report.max_step_residual(),
    });
    let verdict = verdict_of(report.violations == 0);
    Ok((vec![to_value(&report)], summary, verdict))
}

#[derive(Debug, Clone, Serialize)]
#[serde(rename_all = "camelCase")]
struct RepPoint {
    point: Vec<f64>,
    off_block: f64,
    in_block_rel: f64,
    richardson_delta: f64,
    quadric_residual: f64,
}

fn rep_verify(file: &str, config: &RunConfig) -> Result<Outcome, HarnessError> {
    let doc: RepVerifyDoc = read_doc(file)?;
    if !(doc.min_sigma > 0.0 && doc.min_sigma < 1.0 && doc.radius > 0.0) {
        return Err(HarnessError::Input("need radius > 0 and 0 < minSigma < 1".into()));
    }
    let rep = doc.representation.build(1e-9)?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let points: Vec<DVector<f64>> = (0..doc.samples).map(|_| rep.sample_point(doc.radius, doc.min_sigma, &mut rng)).collect();
    let h = config.fd.first;
    let checks = config.install(|| points.par_iter().map(|x| pullback_metric(&rep, x, h)).collect::<Result<Vec<_>, _>>())??;
    let rows: Vec<RepPoint> = points
        .iter()
        .zip(&checks)
        .map(|(x, c)| RepPoint {
            point: x.iter().copied().collect(),
            off_block: c.off_block,
            in_block_rel: c.in_block_rel,
            richardson_delta: c.richardson_delta,
            quadric_residual: c.quadric_residual,
        })
        .collect();
    let max = |f: fn(&RepPoint) -> f64| rows.iter().map(f).fold(0.0, f64::max);
    let (off, inb, quad) = (max(|r| r.off_block), max(|r| r.in_block_rel), max(|r| r.quadric_residual));
    let t = &config.tol;
    let ok = off <= t.iso_tol && inb <= t.iso_tol && quad <= t.quadric_tol;
    let summary = json!({
        "c": rep.c(),
        "points": rows.len(),
        "maxOffBlock": off,
        "maxInBlockRel": inb,
        "maxQuadricResidual": quad,
        "maxRichardsonDelta": max(|r| r.richardson_delta),
    });
    Ok((rows.iter().map(to_value).collect(), summary, verdict_of(ok)))
}

#[derive(Debug, Clone, Serialize)]
#[serde(rename_all = "camelCase")]
struct CurvaturePoint {
    point: Vec<f64>,
    /// Largest entry of `R(∂ᵢ, ∂ⱼ)` from the warped formula.
    max_abs_r: f64,
    /// Largest entry of the difference to the finite-difference tensor.
    fd_difference: f64,
    /// Sectional curvatures of the coordinate planes `(i, j)`, `i < j`.
    sectional: Vec<f64>,
}

fn curvature(file: &str, config: &RunConfig) -> Result<Outcome, HarnessError> {
    let doc: CurvatureDoc = read_doc(file)?;
    let spec = doc.spec.build()?;
    let n = spec.n();
    let mut points = doc.samples.points(n)?;
    if let Some(c) = &doc.center {
        if c.len() != n {
            return Err(HarnessError::Input(format!("center must have length {n}")));
        }
        let c = DVector::from_column_slice(c);
        points.iter_mut().for_each(|x| *x += &c);
    }
    let h = config.fd.first;
    let eval = |x: &DVector<f64>| -> Result<CurvaturePoint, HarnessError> {
        let fd = fd_riemann(&|y: &DVector<f64>| spec.metric(y), x, h)?;
        let basis = |i: usize| DVector::from_fn(n, |r, _| if r == i { 1.0 } else { 0.0 });
        let (mut max_abs_r, mut fd_difference, mut sectional) = (0.0f64, 0.0f64, Vec::new());
        for i in 0..n {
            for j in i + 1..n {
                let (ei, ej) = (basis(i), basis(j));
                let r = spec.curvature_operator(x, &ei, &ej)?;
                max_abs_r = max_abs_r.max(r.amax());
                fd_difference = fd_difference.max((&r - fd.apply(&ei, &ej)).amax());
                sectional.push(spec.sectional_curvature(x, &ei, &ej)?);
            }
        }
        Ok(CurvaturePoint { point: x.iter().copied().collect(), max_abs_r, fd_difference, sectional })
    };
    let rows = config.install(|| points.par_iter().map(eval).collect::<Result<Vec<_>, _>>())??;
    let max_r = rows.iter().map(|r| r.max_abs_r).fold(0.0, f64::max);
    let max_fd = rows.iter().map(|r| r.fd_difference).fold(0.0, f64::max);
    let sec = rows.iter().flat_map(|r| r.sectional.iter().copied());
    let (lo, hi) = sec.fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), k| (a.min(k), b.max(k)));
    let summary = json!({
        "points": rows.len(),
        "maxAbsR": max_r,
        "maxFdDifference": max_fd,
        "sectionalMin": if lo.is_finite() { json!(lo) } else { Value::Null },
        "sectionalMax": if hi.is_finite() { json!(hi) } else { Value::Null },
    });
    Ok((rows.iter().map(to_value).collect(), summary, verdict_of(max_fd <= config.tol.fd_tol)))
}

#[derive(Debug, Clone, Serialize)]
#[serde(rename_all = "camelCase")]
struct AnalyzePoint {
    point: Vec<f64>,
    nullity: NullityDoc,
    richardson_delta: f64,
    codazzi_residual: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    mixed_residual: Option<f64>,
}

fn analyze(file: &str, config: &RunConfig) -> Result<Outcome, HarnessError> {
    let doc: AnalyzeDoc = read_doc(file)?;
    let f = doc.immersion.build()?;
    let points = doc.samples.points(f.n())?;
    let nullity_config = config.fd_nullity();
    let eval = |x: &DVector<f64>| -> Result<AnalyzePoint, HarnessError> {
        let report = pointwise_nullities(&f, x, &nullity_config)?;
        let mixed = match &doc.groups {
            Some(g) => Some(fundamental_forms(&f, x)?.1.mixed_residual(g)),
            None => None,
        };
        Ok(AnalyzePoint {
            point: x.iter().copied().collect(),
            nullity: NullityDoc::from(&report),
            richardson_delta: richardson_delta(&f, x)?,
            codazzi_residual: codazzi_residual(&f, x, config.fd.second)?,
            mixed_residual: mixed,
        })
    };
    let rows = config.install(|| points.par_iter().map(eval).collect::<Result<Vec<_>, _>>())??;
    let max_mixed = rows.iter().filter_map(|r| r.mixed_residual).reduce(f64::max);
    let nolker = match doc.immersion.composition()? {
        Some(comp) => Some(nolker_alpha_check(&comp, &points)?),
        None => None,
    };
    let mut checks = Vec::new();
    if let Some(m) = max_mixed {
        checks.push(m <= config.tol.adapt_tol);
    }
    if let Some(nc) = &nolker {
        checks.push(nc.max_residual <= config.tol.adapt_tol);
    }
    let verdict = if checks.is_empty() { Verdict::Info } else { verdict_of(checks.iter().all(|&c| c)) };
    let summary = json!({
        "points": rows.len(),
        "hypothesisOk": rows.iter().all(|r| r.nullity.hypothesis_ok),
        "maxMixedResidual": max_mixed,
        "maxCodazziResidual": rows.iter().map(|r| r.codazzi_residual).fold(0.0, f64::max),
        "nolker": nolker,
    });
    Ok((rows.iter().map(to_value).collect(), summary, verdict))
}

/// Comparison of a decomposition with the composition it came from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct RoundTrip {
    pub expected_dims: Vec<usize>,
    pub recovered_dims: Vec<usize>,
    /// Base and factor coordinate groups recovered exactly.
    pub groups_match: bool,
    /// Largest `|ρ(x)/ρ(x*) − ρ̂(x)|` over samples and factors.
    pub max_rho_error: f64,
    pub claims_hold: bool,
    pub passed: bool,
}

/// Checks `result` against the factors and warpings of `comp`.
pub fn round_trip(comp: &WarpedComposition, samples: &[DVector<f64>], result: &DecompositionResult, rho_tol: f64) -> RoundTrip {
    let groups = comp.groups();
    let expected_dims = comp.dims();
    let mut groups_match = result.base == groups[0] && result.factors.len() == groups.len() - 1;
    let star = comp.split(&DVector::from_column_slice(&result.base_point))[0].clone();
    let rho_star = comp.rho(&star);
    let mut max_rho_error: f64 = 0.0;
    for w in &result.factors {
        let Some(i) = groups[1..].iter().position(|g| *g == w.coords) else {
            groups_match = false;
            continue;
        };
        for (x, r) in samples.iter().zip(&w.rho) {
            let truth = comp.rho(&comp.split(x)[0])[i] / rho_star[i];
            max_rho_error = max_rho_error.max((r - truth).abs());
        }
    }
    let claims_hold = result.claims_hold();
    let passed = groups_match && result.block_dims == expected_dims && max_rho_error <= rho_tol && claims_hold;
    RoundTrip { expected_dims, recovered_dims: result.block_dims.clone(), groups_match, max_rho_error, claims_hold, passed }
}

fn decompose_cmd(file: &str, config: &RunConfig) -> Result<Outcome, HarnessError> {
    let doc: DecomposeDoc = read_doc(file)?;
    let f = doc.immersion.build()?;
    let samples = doc.samples.points(f.n())?;
    let cfg = doc.config.clone().unwrap_or_else(|| config.decompose());
    let result = config.install(|| decompose(&f, &samples, &cfg))??;
    let rt = doc.immersion.composition()?.map(|comp| round_trip(&comp, &samples, &result, config.tol.iso_tol));
    let verdict = match &rt {
        Some(r) => verdict_of(r.passed),
        None => verdict_of(result.claims_hold()),
    };
    let summary = json!({
        "blockDims": result.block_dims,
        "base": result.base,
        "claimsHold": result.claims_hold(),
        "codSum": result.cod_sum,
        "roundTrip": rt,
    });
    Ok((vec![to_value(&result)], summary, verdict))
}

#[derive(Debug, Clone, Serialize)]
#[serde(rename_all = "camelCase")]
struct OracleRow {
    s: usize,
    oracle: usize,
    search: usize,
    arg: Vec<Vec<f64>>,
}

/// Search values of `form` with the run's starts and seed.
pub fn search_values(form: &SymmetricBilinearForm, config: &RunConfig) -> Result<Vec<usize>, HarnessError> {
    let nc = NullityConfig { mode: NullityMode::Search, ..config.nullity() };
    Ok(nullity_profile(form, &nc)?.values)
}

fn oracle(file: &str, s: Option<usize>, config: &RunConfig) -> Result<Outcome, HarnessError> {
    let form = read_doc::<FormDoc>(file)?.build()?;
    let p = form.p();
    let res = if p == 3 { config.grid_res_2d } else { config.grid_res };
    let range: Vec<usize> = match s {
        Some(s) => vec![s],
        None => (1..=p).collect(),
    };
    let search = search_values(&form, config)?;
    let rows = range
        .iter()
        .map(|&s| {
            // the oracle rejects an out-of-range s before the search values are indexed
            let o = oracle_grassmann_grid(&form, s, res, config.tol.rank_tol)?;
            Ok(OracleRow { s, oracle: o.value, search: search[s - 1], arg: o.arg })
        })
        .collect::<Result<Vec<_>, HarnessError>>()?;
    let agree = rows.iter().all(|r| r.oracle == r.search);
    let summary = json!({ "agree": agree, "resolution": res });
    Ok((rows.iter().map(to_value).collect(), summary, verdict_of(agree)))
}
