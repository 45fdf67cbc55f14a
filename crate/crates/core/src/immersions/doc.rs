//! JSON documents for immersions and sample grids.

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use super::composition::builtin::revolution;
use super::{builtin, make_composition, FactorMap, ImmersionError, NumericalImmersion, OuterMap, PolynomialMap, WarpedComposition};
use crate::spaceforms::RepresentationDoc;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "kebab-case")]
pub enum ImmersionDoc {
    /// `x ↦ (x, h(x))`.
    GraphPolynomial { height: PolynomialMap },
    /// Upper hemisphere of the given radius as a graph over `Rⁿ`.
    SphereChart { n: usize, radius: f64 },
    /// Hypersurface of revolution of a profile `t ↦ (r(t) − 1, h(t))`.
    #[serde(rename_all = "camelCase")]
    Revolution { profile: PolynomialMap, sphere_dim: usize },
    /// `g ∘ f`.
    Composition { inner: Box<ImmersionDoc>, outer: OuterMap },
    /// `Ψ ∘ (f₀ × … × f_k)` with polynomial factor maps.
    WarpedComposition { representation: RepresentationDoc, maps: Vec<PolynomialMap> },
}

impl ImmersionDoc {
    /// The warped composition behind the document, when it has one.
    pub fn composition(&self) -> Result<Option<WarpedComposition>, ImmersionError> {
        match self {
            Self::Revolution { profile, sphere_dim } => Ok(Some(revolution(profile.clone(), *sphere_dim)?)),
            Self::WarpedComposition { representation, maps } => {
                let rep = representation.build(1e-9)?;
                let maps = maps.iter().cloned().map(FactorMap::Polynomial).collect();
                Ok(Some(WarpedComposition::new(rep, maps)?))
            }
            _ => Ok(None),
        }
    }

    pub fn build(&self) -> Result<NumericalImmersion, ImmersionError> {
        if let Some(c) = self.composition()? {
            return Ok(c.immersion());
        }
        match self {
            Self::GraphPolynomial { height } => {
                let checked = PolynomialMap::new(height.n, height.m, height.terms.clone())?;
                Ok(NumericalImmersion::from_polynomial(PolynomialMap::graph(&checked)))
            }
            Self::SphereChart { n, radius } => {
                if *radius <= 0.0 {
                    return Err(ImmersionError::Invalid(format!("radius {radius} must be positive")));
                }
                Ok(builtin::sphere_chart(*n, *radius))
            }
            Self::Composition { inner, outer } => make_composition(&inner.build()?, outer),
            Self::Revolution { .. } | Self::WarpedComposition { .. } => unreachable!("handled above"),
        }
    }
}

/// Sample points in chart coordinates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "camelCase")]
pub enum SampleSpec {
    /// Uniform in `[−radius, radius]ⁿ` from a seeded generator.
    Box { count: usize, radius: f64, seed: u64 },
    Points { points: Vec<Vec<f64>> },
}

impl SampleSpec {
    pub fn points(&self, n: usize) -> Result<Vec<DVector<f64>>, ImmersionError> {
        match self {
            Self::Box { count, radius, seed } => Ok(super::decompose::box_samples(n, *count, *radius, *seed)),
            Self::Points { points } => points
                .iter()
                .map(|p| {
                    if p.len() != n {
                        Err(ImmersionError::DimensionMismatch { expected: n, got: p.len() })
                    } else {
                        Ok(DVector::from_column_slice(p))
                    }
                })
                .collect(),
        }
    }
}
