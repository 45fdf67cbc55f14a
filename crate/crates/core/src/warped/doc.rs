//! JSON form of a warped metric specification.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::{FactorMetric, Monomial, QuadraticFit, WarpedError, WarpedMetricSpec, Warping};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "camelCase")]
pub enum MetricDoc {
    Euclidean,
    Sphere {
        #[serde(default = "one")]
        curvature: f64,
    },
    Hyperbolic {
        #[serde(default = "minus_one")]
        curvature: f64,
    },
    /// Metric samples at chart points, row-major matrices.
    Sampled { points: Vec<Vec<f64>>, values: Vec<Vec<f64>> },
}

fn one() -> f64 {
    1.0
}

fn minus_one() -> f64 {
    -1.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "camelCase")]
pub enum WarpingDoc {
    Affine { a: f64, b: Vec<f64> },
    Exponential {
        a: f64,
        b: Vec<f64>,
        #[serde(default)]
        c: f64,
    },
    Polynomial { terms: Vec<Monomial> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WarpedFactorDoc {
    pub dim: usize,
    pub metric: MetricDoc,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WarpedSpecDoc {
    pub factors: Vec<WarpedFactorDoc>,
    pub warpings: Vec<WarpingDoc>,
}

impl MetricDoc {
    fn build(&self, dim: usize) -> Result<FactorMetric, WarpedError> {
        Ok(match self {
            Self::Euclidean => FactorMetric::Euclidean,
            Self::Sphere { curvature } if *curvature > 0.0 => FactorMetric::ConstantCurvature { kappa: *curvature },
            Self::Hyperbolic { curvature } if *curvature < 0.0 => FactorMetric::ConstantCurvature { kappa: *curvature },
            Self::Sphere { curvature } | Self::Hyperbolic { curvature } => {
                return Err(WarpedError::InvalidSpec(format!("curvature {curvature} has the wrong sign for this kind")));
            }
            Self::Sampled { points, values } => {
                let pts = points.iter().map(|p| DVector::from_column_slice(p)).collect();
                let vals = values
                    .iter()
                    .map(|v| {
                        if v.len() != dim * dim {
                            return Err(WarpedError::DimensionMismatch { expected: dim * dim, got: v.len() });
                        }
                        Ok(DMatrix::from_row_slice(dim, dim, v))
                    })
                    .collect::<Result<Vec<_>, _>>()?;
                FactorMetric::Sampled(QuadraticFit::fit(pts, vals)?)
            }
        })
    }
}

impl WarpingDoc {
    fn build(&self, n0: usize) -> Warping {
        match self {
            Self::Affine { a, b } => Warping::Affine { a: *a, b: DVector::from_column_slice(b) },
            Self::Exponential { a, b, c } => Warping::Exponential { a: *a, b: DVector::from_column_slice(b), c: *c },
            Self::Polynomial { terms } => Warping::Polynomial { dim: n0, terms: terms.clone() },
        }
    }
}

impl WarpedSpecDoc {
    pub fn build(&self) -> Result<WarpedMetricSpec, WarpedError> {
        let factors = self.factors.iter().map(|f| Ok((f.dim, f.metric.build(f.dim)?))).collect::<Result<Vec<_>, WarpedError>>()?;
        let n0 = self.factors.first().map_or(0, |f| f.dim);
        WarpedMetricSpec::new(factors, self.warpings.iter().map(|w| w.build(n0)).collect())
    }
}

impl TryFrom<&WarpedMetricSpec> for WarpedSpecDoc {
    type Error = WarpedError;

    /// Fails for custom metrics and warpings, which have no document form.
    fn try_from(spec: &WarpedMetricSpec) -> Result<Self, WarpedError> {
        let factors = spec
            .dims()
            .iter()
            .zip(spec.metrics())
            .map(|(&dim, m)| {
                let metric = match m {
                    FactorMetric::Euclidean => MetricDoc::Euclidean,
                    FactorMetric::ConstantCurvature { kappa } if *kappa > 0.0 => MetricDoc::Sphere { curvature: *kappa },
                    FactorMetric::ConstantCurvature { kappa } if *kappa < 0.0 => MetricDoc::Hyperbolic { curvature: *kappa },
                    FactorMetric::ConstantCurvature { .. } => MetricDoc::Euclidean,
                    FactorMetric::Sampled(fit) => MetricDoc::Sampled {
                        points: fit.points().iter().map(|p| p.as_slice().to_vec()).collect(),
                        values: fit.values().iter().map(|v| v.transpose().as_slice().to_vec()).collect(),
                    },
                    FactorMetric::Custom(_) => return Err(WarpedError::InvalidSpec("custom metric has no document form".into())),
                };
                Ok(WarpedFactorDoc { dim, metric })
            })
            .collect::<Result<Vec<_>, _>>()?;
        let warpings = spec
            .warpings()
            .iter()
            .map(|w| match w {
                Warping::Affine { a, b } => Ok(WarpingDoc::Affine { a: *a, b: b.as_slice().to_vec() }),
                Warping::Exponential { a, b, c } => Ok(WarpingDoc::Exponential { a: *a, b: b.as_slice().to_vec(), c: *c }),
                Warping::Polynomial { terms, .. } => Ok(WarpingDoc::Polynomial { terms: terms.clone() }),
                Warping::Custom { .. } => Err(WarpedError::InvalidSpec("custom warping has no document form".into())),
            })
            .collect::<Result<Vec<_>, _>>()?;
        Ok(Self { factors, warpings })
    }
}
