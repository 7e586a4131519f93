use serde::{Deserialize, Serialize};

use super::{JumpLaw, LevyTriple, MeasureSpec, NoiseModel};
use crate::error::{Result, SureError};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FamilyName {
    Normal,
    Laplace,
    Gamma,
    Sech,
    Uniform,
    CompoundPoisson,
    GenericId,
}

/// JSON form of a noise model.
///
/// ```json
/// {"family": "gamma", "shape": 2.0, "scale": 0.7071067811865476}
/// {"family": "compound_poisson", "rate": 3.0, "jump": {"law": "normal", "mean": 0.0, "sd": 0.5}}
/// {"family": "generic_id", "gaussian_var": 0.5,
///  "jump_measure": {"components": [{"base": {"kind": "laplace"}, "scale": 0.7}], "atoms": [[1.0, 0.1]]}}
/// ```
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelSpec {
    pub family: Option<FamilyName>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub variance: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub shape: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub halfwidth: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rate: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub jump: Option<JumpLaw>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub drift: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub gaussian_var: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub jump_measure: Option<MeasureSpec>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub scale: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub shift: Option<f64>,
}

impl ModelSpec {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| SureError::Spec(e.to_string()))
    }

    pub fn named(family: FamilyName) -> Self {
        Self {
            family: Some(family),
            ..Self::default()
        }
    }

    fn reject(&self, allowed: &[&str]) -> Result<()> {
        let present = [
            ("variance", self.variance.is_some()),
            ("shape", self.shape.is_some()),
            ("halfwidth", self.halfwidth.is_some()),
            ("rate", self.rate.is_some()),
            ("jump", self.jump.is_some()),
            ("drift", self.drift.is_some()),
            ("gaussian_var", self.gaussian_var.is_some()),
            ("jump_measure", self.jump_measure.is_some()),
        ];
        for (name, set) in present {
            if set && !allowed.contains(&name) {
                return Err(SureError::Spec(format!(
                    "field `{name}` does not apply to family {:?}",
                    self.family
                )));
            }
        }
        Ok(())
    }

    pub fn to_model(&self) -> Result<NoiseModel> {
        let family = self
            .family
            .ok_or_else(|| SureError::Spec("missing `family`".into()))?;
        let base = match family {
            FamilyName::Normal => {
                self.reject(&["variance"])?;
                NoiseModel::normal(self.variance.unwrap_or(1.0))?
            }
            FamilyName::Laplace => {
                self.reject(&[])?;
                NoiseModel::laplace(1.0)?
            }
            FamilyName::Gamma => {
                self.reject(&["shape"])?;
                NoiseModel::centered_gamma(self.shape.unwrap_or(2.0))?
            }
            FamilyName::Sech => {
                self.reject(&[])?;
                NoiseModel::sech()
            }
            FamilyName::Uniform => {
                self.reject(&["halfwidth"])?;
                NoiseModel::uniform(self.halfwidth.unwrap_or(1.0))?
            }
            FamilyName::CompoundPoisson => {
                self.reject(&["rate", "jump"])?;
                let rate = self
                    .rate
                    .ok_or_else(|| SureError::Spec("compound_poisson needs `rate`".into()))?;
                let jump = self
                    .jump
                    .clone()
                    .ok_or_else(|| SureError::Spec("compound_poisson needs `jump`".into()))?;
                NoiseModel::compound_poisson(rate, jump)?
            }
            FamilyName::GenericId => {
                self.reject(&["drift", "gaussian_var", "jump_measure"])?;
                NoiseModel::generic(LevyTriple::new(
                    self.drift.unwrap_or(0.0),
                    self.gaussian_var.unwrap_or(0.0),
                    self.jump_measure.clone().unwrap_or_default(),
                )?)?
            }
        };
        let scaled = match self.scale {
            Some(c) => base.scale(c)?,
            None => base,
        };
        match self.shift {
            Some(b) => scaled.shift(b),
            None => Ok(scaled),
        }
    }
}
