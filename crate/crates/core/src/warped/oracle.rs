//! Finite-difference Christoffel symbols and Riemann tensor of an arbitrary
//! metric, used to certify the closed-form connection and curvature.

use nalgebra::{DMatrix, DVector};

use super::metric::{christoffel_from, riemann_apply};
use super::WarpedError;

fn fd_derivatives<F>(metric: &F, x: &DVector<f64>, h: f64) -> Result<Vec<DMatrix<f64>>, WarpedError>
where
    F: Fn(&DVector<f64>) -> Result<DMatrix<f64>, WarpedError>,
{
    (0..x.len())
        .map(|c| {
            let (mut xp, mut xm) = (x.clone(), x.clone());
            xp[c] += h;
            xm[c] -= h;
            Ok((metric(&xp)? - metric(&xm)?) / (2.0 * h))
        })
        .collect()
}

/// `Γ[a][(b, c)] = Γ^a_{bc}` from central differences of `metric` with step `h`.
pub fn fd_christoffel<F>(metric: &F, x: &DVector<f64>, h: f64) -> Result<Vec<DMatrix<f64>>, WarpedError>
where
    F: Fn(&DVector<f64>) -> Result<DMatrix<f64>, WarpedError>,
{
    christoffel_from(&metric(x)?, &fd_derivatives(metric, x, h)?)
}

/// Riemann tensor from nested central differences: Christoffels with step
/// `h`, their derivatives with step `2h`.
#[derive(Debug, Clone)]
pub struct FdRiemann {
    gamma: Vec<DMatrix<f64>>,
    dgamma: Vec<Vec<DMatrix<f64>>>,
    pub metric: DMatrix<f64>,
}

impl FdRiemann {
    /// `R(u,v)` as a matrix.
    pub fn apply(&self, u: &DVector<f64>, v: &DVector<f64>) -> DMatrix<f64> {
        riemann_apply(&self.gamma, &self.dgamma, u, v)
    }

    pub fn christoffel(&self) -> &[DMatrix<f64>] {
        &self.gamma
    }
}

pub fn fd_riemann<F>(metric: &F, x: &DVector<f64>, h: f64) -> Result<FdRiemann, WarpedError>
where
    F: Fn(&DVector<f64>) -> Result<DMatrix<f64>, WarpedError>,
{
    let gamma = fd_christoffel(metric, x, h)?;
    let step = 2.0 * h;
    let mut dgamma = Vec::with_capacity(x.len());
    for c in 0..x.len() {
        let (mut xp, mut xm) = (x.clone(), x.clone());
        xp[c] += step;
        xm[c] -= step;
        let (gp, gm) = (fd_christoffel(metric, &xp, h)?, fd_christoffel(metric, &xm, h)?);
        dgamma.push(gp.iter().zip(&gm).map(|(p, m)| (p - m) / (2.0 * step)).collect());
    }
    Ok(FdRiemann { gamma, dgamma, metric: metric(x)? })
}
