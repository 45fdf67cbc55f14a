//! Instance documents read by the command-line tool and the serialized
//! forms of the library results it reports.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::{HarnessError, SCHEMA_VERSION};
use crate::forms::{NullityReport, SymmetricBilinearForm};
use crate::linalg;
use crate::immersions::{DecomposeConfig, ImmersionDoc, SampleSpec};
use crate::spaceforms::RepresentationDoc;
use crate::splitting::{LemmaReport, OrthogonalSplitting};
use crate::warped::WarpedSpecDoc;

/// A matrix as a flat row-major list or as a list of rows.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum MatrixRows {
    Flat(Vec<f64>),
    Rows(Vec<Vec<f64>>),
}

impl MatrixRows {
    pub fn from_matrix(m: &DMatrix<f64>) -> Self {
        Self::Rows(rows(m))
    }

    pub fn to_matrix(&self, nrows: usize, ncols: usize) -> Result<DMatrix<f64>, HarnessError> {
        match self {
            Self::Flat(v) => {
                if v.len() != nrows * ncols {
                    return Err(HarnessError::Input(format!("expected {} entries, got {}", nrows * ncols, v.len())));
                }
                Ok(DMatrix::from_row_slice(nrows, ncols, v))
            }
            Self::Rows(r) => {
                if r.len() != nrows || r.iter().any(|row| row.len() != ncols) {
                    return Err(HarnessError::Input(format!("expected a {nrows}×{ncols} matrix")));
                }
                Ok(DMatrix::from_fn(nrows, ncols, |i, j| r[i][j]))
            }
        }
    }
}

/// Row-major nested rows of a matrix.
pub fn rows(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    m.row_iter().map(|r| r.iter().copied().collect()).collect()
}

fn columns(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    m.column_iter().map(|c| c.iter().copied().collect()).collect()
}

fn default_sym_tol() -> f64 {
    1e-12
}

/// `{"n", "p", "ops": [row-major matrix, …], "symTol"}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct FormDoc {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub schema_version: Option<u32>,
    pub n: usize,
    pub p: usize,
    pub ops: Vec<MatrixRows>,
    #[serde(default = "default_sym_tol")]
    pub sym_tol: f64,
}

impl FormDoc {
    pub fn from_form(form: &SymmetricBilinearForm) -> Self {
        Self {
            schema_version: Some(SCHEMA_VERSION),
            n: form.n(),
            p: form.p(),
            ops: form.ops().iter().map(|a| MatrixRows::Flat(a.transpose().iter().copied().collect())).collect(),
            sym_tol: form.sym_tol(),
        }
    }

    pub fn build(&self) -> Result<SymmetricBilinearForm, HarnessError> {
        if self.ops.len() != self.p {
            return Err(HarnessError::Input(format!("p = {} but {} operators given", self.p, self.ops.len())));
        }
        let ops = self.ops.iter().map(|m| m.to_matrix(self.n, self.n)).collect::<Result<Vec<_>, _>>()?;
        Ok(SymmetricBilinearForm::new(ops, self.sym_tol)?)
    }
}

/// A form document plus a two-block splitting given by basis columns,
/// or an immersion and a chart point whose second fundamental form is used.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum LemmaDoc {
    Form {
        #[serde(flatten)]
        form: FormDoc,
        split: Vec<Vec<Vec<f64>>>,
    },
    #[serde(rename_all = "camelCase")]
    Immersion {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        schema_version: Option<u32>,
        immersion: ImmersionDoc,
        point: Vec<f64>,
        /// Chart coordinate groups forming the two blocks.
        groups: Vec<Vec<usize>>,
    },
}

/// Splitting from lists of basis columns.
pub fn splitting_from_columns(n: usize, blocks: &[Vec<Vec<f64>>], tol: f64) -> Result<OrthogonalSplitting, HarnessError> {
    let mats = blocks
        .iter()
        .map(|cols| {
            if cols.iter().any(|c| c.len() != n) {
                return Err(HarnessError::Input(format!("split columns must have length n = {n}")));
            }
            let cols: Vec<DVector<f64>> = cols.iter().map(|c| DVector::from_column_slice(c)).collect();
            Ok(if cols.is_empty() { DMatrix::zeros(n, 0) } else { DMatrix::from_columns(&cols) })
        })
        .collect::<Result<Vec<_>, _>>()?;
    Ok(OrthogonalSplitting::new(n, mats, tol)?)
}

/// Splitting of the tangent space into the spans of chart coordinate
/// groups, in the orthonormal frame `eₐ = Σᵢ chart_frame[(i, a)] ∂ᵢ`. Fails
/// when the groups are not orthogonal within `tol`.
pub fn splitting_from_groups(chart_frame: &DMatrix<f64>, groups: &[Vec<usize>], tol: f64) -> Result<OrthogonalSplitting, HarnessError> {
    let n = chart_frame.nrows();
    let mut seen = vec![false; n];
    for &i in groups.iter().flatten() {
        if i >= n || seen[i] {
            return Err(HarnessError::Input(format!("groups must partition 0..{n}")));
        }
        seen[i] = true;
    }
    if seen.iter().any(|s| !s) {
        return Err(HarnessError::Input(format!("groups must partition 0..{n}")));
    }
    // ∂ᵢ in frame coordinates is column i of chart_frame⁻¹
    let inv = chart_frame.clone().try_inverse().ok_or_else(|| HarnessError::Input("singular chart frame".into()))?;
    let blocks = groups.iter().map(|g| linalg::orthonormalize(&inv.select_columns(g.iter()))).collect();
    Ok(OrthogonalSplitting::new(n, blocks, tol)?)
}

/// Report item for a nullity profile.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct NullityDoc {
    pub n: usize,
    pub p: usize,
    pub values: Vec<usize>,
    pub certified: Vec<bool>,
    pub hypothesis_ok: bool,
    /// Witness frames, row-major `p × s`.
    pub witnesses: Vec<Vec<Vec<f64>>>,
}

impl From<&NullityReport> for NullityDoc {
    fn from(r: &NullityReport) -> Self {
        Self {
            n: r.n,
            p: r.p,
            values: r.values.clone(),
            certified: r.certified.clone(),
            hypothesis_ok: r.hypothesis_ok,
            witnesses: r.witnesses.iter().map(rows).collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct LemmaDocOut {
    pub verdict: crate::splitting::Verdict,
    pub reason: Option<String>,
    pub nullity: NullityDoc,
    pub curvature: crate::splitting::CurvatureResidual,
    pub s_dim: usize,
    pub s_norm: f64,
    pub max_rank: usize,
    pub max_rank_direction: Vec<f64>,
    pub step_one: Option<f64>,
    pub step_zero: Option<f64>,
    pub step_two: Option<f64>,
    /// Basis columns of `D = ker B_x`.
    pub kernel_d: Option<Vec<Vec<f64>>>,
}

impl From<&LemmaReport> for LemmaDocOut {
    fn from(r: &LemmaReport) -> Self {
        Self {
            verdict: r.verdict,
            reason: r.reason.clone(),
            nullity: NullityDoc::from(&r.nullity),
            curvature: r.curvature,
            s_dim: r.s_dim,
            s_norm: r.s_norm,
            max_rank: r.max_rank,
            max_rank_direction: r.max_rank_direction.iter().copied().collect(),
            step_one: r.steps.as_ref().map(|s| s.step_one),
            step_zero: r.steps.as_ref().map(|s| s.step_zero),
            step_two: r.steps.as_ref().map(|s| s.step_two),
            kernel_d: r.steps.as_ref().map(|s| columns(&s.kernel_d)),
        }
    }
}

fn default_rep_samples() -> usize {
    100
}

fn default_rep_radius() -> f64 {
    0.5
}

fn default_min_sigma() -> f64 {
    0.2
}

/// A warped representation and how to sample its chart.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct RepVerifyDoc {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub schema_version: Option<u32>,
    pub representation: RepresentationDoc,
    #[serde(default = "default_rep_samples")]
    pub samples: usize,
    #[serde(default = "default_rep_radius")]
    pub radius: f64,
    /// Points with some `σᵢ` below this are redrawn.
    #[serde(default = "default_min_sigma")]
    pub min_sigma: f64,
}

/// A warped metric specification and the points to evaluate it at
/// (`center + sample`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct CurvatureDoc {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub schema_version: Option<u32>,
    pub spec: WarpedSpecDoc,
    pub samples: SampleSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub center: Option<Vec<f64>>,
}

/// An immersion and chart samples, with optional declared coordinate groups.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct AnalyzeDoc {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub schema_version: Option<u32>,
    pub immersion: ImmersionDoc,
    pub samples: SampleSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub groups: Option<Vec<Vec<usize>>>,
}

/// An immersion, chart samples and decomposition settings layered over the
/// run configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct DecomposeDoc {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub schema_version: Option<u32>,
    pub immersion: ImmersionDoc,
    pub samples: SampleSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub config: Option<DecomposeConfig>,
}
