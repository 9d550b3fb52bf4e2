//! Strain-dependent blending curves and material presets.

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MaterialError {
    #[error("stiffness curve needs at least one knot")]
    EmptyCurve,
    #[error("knot strains must be strictly increasing (knot {index})")]
    NonIncreasingStrain { index: usize },
    #[error("knot value {value} at knot {index} is outside (0, 1)")]
    ValueOutOfRange { index: usize, value: f64 },
    #[error("knot strain {value} at knot {index} is negative or not finite")]
    InvalidStrain { index: usize, value: f64 },
    #[error("singular value {value} is not positive")]
    NonPositiveSingularValue { value: f64 },
    #[error("Mooney-Rivlin constants must be positive (c1 = {c1}, c2 = {c2})")]
    NonPositiveModulus { c1: f64, c2: f64 },
    #[error("unknown material preset {0:?}")]
    UnknownPreset(String),
}

/// Piecewise-linear map from strain to the blending weight, clamped outside
/// the knot range.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "CurveDoc", into = "CurveDoc")]
pub struct StiffnessCurve {
    knots: Vec<(f64, f64)>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct CurveDoc {
    knots: Vec<(f64, f64)>,
}

impl TryFrom<CurveDoc> for StiffnessCurve {
    type Error = MaterialError;
    fn try_from(doc: CurveDoc) -> Result<Self, Self::Error> {
        StiffnessCurve::new(doc.knots)
    }
}

impl From<StiffnessCurve> for CurveDoc {
    fn from(c: StiffnessCurve) -> Self {
        CurveDoc { knots: c.knots }
    }
}

impl StiffnessCurve {
    pub fn new(knots: Vec<(f64, f64)>) -> Result<Self, MaterialError> {
        if knots.is_empty() {
            return Err(MaterialError::EmptyCurve);
        }
        for (i, &(s, r)) in knots.iter().enumerate() {
            if !s.is_finite() || s < 0.0 {
                return Err(MaterialError::InvalidStrain { index: i, value: s });
            }
            if !(r > 0.0 && r < 1.0) {
                return Err(MaterialError::ValueOutOfRange { index: i, value: r });
            }
            if i > 0 && s <= knots[i - 1].0 {
                return Err(MaterialError::NonIncreasingStrain { index: i });
            }
        }
        Ok(StiffnessCurve { knots })
    }

    pub fn constant(value: f64) -> Result<Self, MaterialError> {
        StiffnessCurve::new(vec![(0.0, value)])
    }

    pub fn knots(&self) -> &[(f64, f64)] {
        &self.knots
    }

    pub fn eval(&self, strain: f64) -> f64 {
        let k = &self.knots;
        if strain <= k[0].0 {
            return k[0].1;
        }
        let last = k[k.len() - 1];
        if strain >= last.0 {
            return last.1;
        }
        let i = k.partition_point(|&(s, _)| s <= strain);
        let (s0, r0) = k[i - 1];
        let (s1, r1) = k[i];
        r0 + (r1 - r0) * (strain - s0) / (s1 - s0)
    }

    pub fn is_monotone(&self) -> bool {
        let k = &self.knots;
        k.windows(2).all(|w| w[1].1 >= w[0].1) || k.windows(2).all(|w| w[1].1 <= w[0].1)
    }

    /// Same knot strains with every value multiplied by `factor`.
    pub fn scaled(&self, factor: f64) -> Result<Self, MaterialError> {
        StiffnessCurve::new(self.knots.iter().map(|&(s, r)| (s, r * factor)).collect())
    }
}

impl Default for StiffnessCurve {
    fn default() -> Self {
        StiffnessCurve { knots: vec![(0.0, 0.5)] }
    }
}

/// Largest principal stretch deviation, `max |σ_i - 1|`.
pub fn strain_measure(sigma: [f64; 3]) -> Result<f64, MaterialError> {
    let mut m: f64 = 0.0;
    for s in sigma {
        if !(s > 0.0) {
            return Err(MaterialError::NonPositiveSingularValue { value: s });
        }
        m = m.max((s - 1.0).abs());
    }
    Ok(m)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "camelCase")]
pub struct MaterialPreset {
    pub name: String,
    /// MPa
    pub mooney_c1: f64,
    /// MPa
    pub mooney_c2: f64,
    pub curve: StiffnessCurve,
}

impl MaterialPreset {
    pub fn validate(&self) -> Result<(), MaterialError> {
        if !(self.mooney_c1 > 0.0 && self.mooney_c2 > 0.0) {
            return Err(MaterialError::NonPositiveModulus { c1: self.mooney_c1, c2: self.mooney_c2 });
        }
        Ok(())
    }
}

pub const PRESET_NAMES: [&str; 3] = ["default", "ecoflex-00-30", "dragon-skin-20"];

/// Built-in presets. All ship a constant curve at 0.5; the Mooney-Rivlin
/// constants are carried as metadata.
pub fn preset(name: &str) -> Result<MaterialPreset, MaterialError> {
    let (c1, c2) = match name {
        "default" => (0.0418, 0.0106),
        "ecoflex-00-30" => (0.0418, 0.0106),
        "dragon-skin-20" => (0.119, 0.023),
        other => return Err(MaterialError::UnknownPreset(other.to_string())),
    };
    Ok(MaterialPreset { name: name.to_string(), mooney_c1: c1, mooney_c2: c2, curve: StiffnessCurve::default() })
}
