//! Run configuration: a TOML file with optional sections, overridden by
//! command-line flags. The resolved configuration is embedded in, and
//! hashed into, every result document.

use std::collections::BTreeMap;
use std::path::Path;

use focal_core::data::{Schema, EDUCATION, INCOME};
use focal_core::debias::FocalRule;
use focal_core::mixture::CutoffMode;
use focal_core::mlogit::EffectsMethod;
use focal_core::scale::ResponseScale;
use serde::{Deserialize, Serialize};

use crate::CliError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DataSection {
    pub path: Option<String>,
    pub response: String,
    pub weight: Option<String>,
    pub use_weights: bool,
    /// Model name to file column.
    pub covariates: BTreeMap<String, String>,
    /// Model names of the numeracy design; empty means the model covariates.
    pub numeracy: Vec<String>,
    /// File column used with `min_age`.
    pub age: Option<String>,
    pub min_age: Option<f64>,
}

impl Default for DataSection {
    fn default() -> Self {
        Self {
            path: None,
            response: "swl".into(),
            weight: None,
            use_weights: true,
            covariates: [INCOME, EDUCATION].iter().map(|c| (c.to_string(), c.to_string())).collect(),
            numeracy: Vec::new(),
            age: None,
            min_age: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScaleSection {
    pub min: i32,
    pub max: i32,
    /// Defaults to `[min, 5, max]`.
    pub focal: Option<[i32; 3]>,
}

impl Default for ScaleSection {
    fn default() -> Self {
        Self { min: 0, max: 10, focal: None }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModelSection {
    /// Regressors; empty means every mapped covariate in file order.
    pub covariates: Vec<String>,
    /// Multinomial base category; defaults to the scale minimum.
    pub base: Option<i32>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MixtureSection {
    pub mode: CutoffMode,
    pub hops: usize,
    pub step: f64,
    /// Bootstrap replicates; 0 fits the full sample only.
    pub bootstrap: usize,
    pub keep: f64,
    pub replicate_hops: Option<usize>,
    pub warm_start: bool,
}

impl Default for MixtureSection {
    fn default() -> Self {
        Self { mode: CutoffMode::Free, hops: 50, step: 0.5, bootstrap: 0, keep: 2.0 / 3.0, replicate_hops: None, warm_start: true }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DebiasSection {
    pub rules: Vec<FocalRule>,
    pub replication: usize,
    /// Covariate whose levels define the group-mean table; `None` skips it.
    pub group: Option<String>,
    pub group_replicates: usize,
}

impl Default for DebiasSection {
    fn default() -> Self {
        Self { rules: FocalRule::ALL.to_vec(), replication: 10, group: None, group_replicates: 0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EffectsSection {
    pub method: EffectsMethod,
    pub replicates: usize,
    /// Covariates to report; empty means every model covariate.
    pub covariates: Vec<String>,
}

impl Default for EffectsSection {
    fn default() -> Self {
        Self { method: EffectsMethod::Bootstrap, replicates: 200, covariates: Vec::new() }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub seed: u64,
    pub data: DataSection,
    pub scale: ScaleSection,
    pub model: ModelSection,
    pub mixture: MixtureSection,
    pub debias: DebiasSection,
    pub effects: EffectsSection,
}

impl RunConfig {
    pub fn load(path: Option<&Path>) -> Result<Self, CliError> {
        let Some(path) = path else { return Ok(Self::default()) };
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Usage(format!("cannot read config {}: {e}", path.display())))?;
        toml::from_str(&text).map_err(|e| CliError::Usage(format!("invalid config {}: {e}", path.display())))
    }

    pub fn scale(&self) -> Result<ResponseScale, CliError> {
        let s = &self.scale;
        let focal = s.focal.unwrap_or([s.min, 5, s.max]);
        ResponseScale::new(s.min, s.max, focal).map_err(|e| CliError::Usage(e.to_string()))
    }

    pub fn schema(&self) -> Schema {
        let mut extra = BTreeMap::new();
        if let Some(age) = &self.data.age {
            extra.insert("age".to_string(), age.clone());
        }
        Schema {
            response: self.data.response.clone(),
            weight: if self.data.use_weights { self.data.weight.clone() } else { None },
            covariates: self.data.covariates.clone(),
            numeracy: self.data.numeracy.clone(),
            extra,
        }
    }

    /// SHA-256 of the canonical JSON form.
    pub fn hash(&self) -> String {
        crate::document::sha256_hex(serde_json::to_string(self).expect("config serializes").as_bytes())
    }
}
