//! Brute-force `ν_s` over an angular grid of `Gr(s, p)`, `p ≤ 3`.

use serde::{Deserialize, Serialize};

use super::docs::rows;
use crate::forms::grid::sweep_max;
use crate::forms::{FormError, SymmetricBilinearForm};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct OracleValue {
    pub s: usize,
    pub value: usize,
    /// Maximizing frame, row-major `p × s`.
    pub arg: Vec<Vec<f64>>,
}

/// `ν_s` from the grid sweep with `resolution` points per angle, refined
/// near grid minima of the singular value profiles. Exact for `s = p`.
pub fn oracle_grassmann_grid(
    form: &SymmetricBilinearForm,
    s: usize,
    resolution: usize,
    rank_tol: f64,
) -> Result<OracleValue, FormError> {
    let (value, frame) = sweep_max(form, s, resolution, resolution, rank_tol)?;
    Ok(OracleValue { s, value, arg: rows(&frame) })
}

/// [`oracle_grassmann_grid`] for every `s`, with `res` on `Gr(1, 2)` and
/// `res_2d` on the Grassmannians of `R³`.
pub fn oracle_profile(form: &SymmetricBilinearForm, res: usize, res_2d: usize, rank_tol: f64) -> Result<Vec<OracleValue>, FormError> {
    let r = if form.p() == 3 { res_2d } else { res };
    (1..=form.p()).map(|s| oracle_grassmann_grid(form, s, r, rank_tol)).collect()
}
