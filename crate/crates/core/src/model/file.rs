use serde::{Deserialize, Serialize};

use super::{heat_example, ModelSpec, NoiseSpec, NonlinearitySpec, PowerLaw, SpectralOperator};
use crate::error::{Error, Result};
use crate::stable::StableIndex;

/// Power law `scale * k^exponent`; `modes` generates the first values when no
/// explicit list is given.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LawSpec {
    pub scale: f64,
    pub exponent: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub modes: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HeatSpec {
    pub d: usize,
    pub eta: f64,
    #[serde(rename = "N_per_axis")]
    pub n_per_axis: usize,
}

/// On-disk model description.
///
/// ```json
/// {
///   "alpha": 1.5,
///   "sigma": 0.7,
///   "gammas": [1, 4, 9],            // or "gamma_law": {"scale": 1, "exponent": 2, "modes": 3}
///   "betas": [1, 1, 1],             // or "beta_law": {"scale": 1, "exponent": 0}
///   "nonlinearity": {"family": "diagonal_saturating", "c": [0.1, 0, 0], "saturator": "tanh"},
///   "heat_example": {"d": 1, "eta": 0, "N_per_axis": 16}   // replaces gammas/betas and laws
/// }
/// ```
///
/// When both a list and a law are given, the list holds the retained modes
/// and the law only describes the tail. Unknown keys are rejected.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelFile {
    pub alpha: f64,
    pub sigma: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gammas: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gamma_law: Option<LawSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub betas: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub beta_law: Option<LawSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub nonlinearity: Option<NonlinearitySpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub heat_example: Option<HeatSpec>,
}

fn law(l: &LawSpec) -> PowerLaw {
    PowerLaw { scale: l.scale, exponent: l.exponent }
}

fn expand(list: &Option<Vec<f64>>, l: &Option<LawSpec>, n: Option<usize>, what: &str) -> Result<Vec<f64>> {
    if let Some(v) = list {
        return Ok(v.clone());
    }
    let l = l.as_ref().ok_or_else(|| Error::ModelFile(format!("either {what}s or {what}_law is required")))?;
    let n = l.modes.or(n).ok_or_else(|| Error::ModelFile(format!("{what}_law needs \"modes\" when no list is given")))?;
    Ok((1..=n).map(|k| law(l).value(k)).collect())
}

impl ModelFile {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::ModelFile(e.to_string()))
    }

    pub fn build(&self) -> Result<ModelSpec> {
        let alpha = StableIndex::new(self.alpha)?;
        let nonlinearity = self.nonlinearity.clone().unwrap_or_default();
        if let Some(h) = &self.heat_example {
            if self.gammas.is_some() || self.gamma_law.is_some() || self.betas.is_some() || self.beta_law.is_some() {
                return Err(Error::ModelFile("heat_example cannot be combined with gammas/betas or their laws".into()));
            }
            let ex = heat_example(h.d, alpha, h.eta, h.n_per_axis, self.sigma)?;
            return ex.model.with_nonlinearity(nonlinearity);
        }
        let gammas = expand(&self.gammas, &self.gamma_law, None, "gamma")?;
        let betas = expand(&self.betas, &self.beta_law, Some(gammas.len()), "beta")?;
        ModelSpec::new(
            SpectralOperator::new(gammas, self.gamma_law.as_ref().map(law))?,
            NoiseSpec::new(betas, self.beta_law.as_ref().map(law))?,
            nonlinearity,
            alpha,
            self.sigma,
        )
    }
}

impl ModelSpec {
    /// Parses and validates a JSON model file.
    pub fn from_json(text: &str) -> Result<Self> {
        ModelFile::from_json(text)?.build()
    }
}
