use serde::{Deserialize, Serialize};

use super::likelihood::MixtureLikelihood;
use super::params::{CutoffMode, MixtureParams};
use crate::canonical::fit_ordered_logit;
use crate::data::SurveyDataset;
use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::optim::{basin_hopping, BfgsStatus, HopRecord, HoppingOptions};

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MixtureConfig {
    pub mode: CutoffMode,
    /// Well-being covariates (the latent index).
    pub wellbeing: Vec<String>,
    /// Numeracy covariates; empty means the dataset's numeracy columns, or
    /// the well-being covariates when none are declared.
    pub numeracy: Vec<String>,
    pub hopping: HoppingOptions,
    /// Starting point; defaults to an ordered-logit based start.
    pub init: Option<MixtureParams>,
    #[serde(skip)]
    pub exec: Execution,
}

impl MixtureConfig {
    pub fn new(wellbeing: Vec<String>) -> Self {
        Self {
            mode: CutoffMode::Free,
            wellbeing,
            numeracy: Vec::new(),
            hopping: HoppingOptions::default(),
            init: None,
            exec: Execution::Parallel,
        }
    }

    pub(crate) fn numeracy_for(&self, ds: &SurveyDataset) -> Vec<String> {
        if !self.numeracy.is_empty() {
            self.numeracy.clone()
        } else if !ds.numeracy_covariates().is_empty() {
            ds.numeracy_covariates().to_vec()
        } else {
            self.wellbeing.clone()
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MixtureEstimate {
    pub params: MixtureParams,
    /// Total weighted log-likelihood.
    pub log_likelihood: f64,
    /// Log-likelihood per unit weight.
    pub mean_log_likelihood: f64,
    pub gradient_norm: f64,
    pub status: BfgsStatus,
    pub hops: usize,
    pub accepted_hops: usize,
    pub failed_hops: usize,
    pub trace: Vec<HopRecord>,
}

/// Default start: well-being slopes and high thresholds from an ordered
/// logit, low cutoffs at the tied midpoints, flat numeracy with a 0.8
/// high-type share.
pub fn initial_params(ds: &SurveyDataset, config: &MixtureConfig) -> Result<MixtureParams> {
    let scale = *ds.scale();
    let ol = fit_ordered_logit(ds, &config.wellbeing)?;
    if ol.categories.len() != scale.n_categories() {
        let missing = scale.values().find(|v| !ol.categories.contains(v)).expect("some category missing");
        return Err(Error::EmptyCategory(missing));
    }
    let tau: Vec<f64> = ol.thresholds.iter().map(|t| t.estimate).collect();
    let [(a, b), (c, d)] = scale.tied_cutoff_pairs();
    let numeracy = config.numeracy_for(ds);
    MixtureParams::from_thresholds(
        scale,
        config.mode,
        -(4f64.ln()),
        (numeracy.clone(), vec![0.0; numeracy.len()]),
        (config.wellbeing.clone(), ol.coefficients.iter().map(|c| c.estimate).collect()),
        &tau,
        (0.5 * (tau[a] + tau[b]), 0.5 * (tau[c] + tau[d])),
    )
}

/// Maximum likelihood by basin hopping over the free parameterization.
pub fn fit_mixture(ds: &SurveyDataset, config: &MixtureConfig) -> Result<MixtureEstimate> {
    let numeracy = config.numeracy_for(ds);
    let lik = MixtureLikelihood::new(ds, &config.wellbeing, &numeracy, config.mode, config.exec, true)?;
    let init = match &config.init {
        Some(p) => {
            if p.wellbeing_names != config.wellbeing || p.numeracy_names != numeracy || p.mode != config.mode {
                return Err(Error::InvalidParameters("starting values do not match the model".into()));
            }
            p.clone()
        }
        None => initial_params(ds, config)?,
    };
    let x0 = lik.to_free(&init)?;
    let w = lik.total_weight();
    let objective = |theta: &[f64]| {
        let (v, g) = lik.value_and_gradient(theta);
        (-v / w, g.iter().map(|gi| -gi / w).collect())
    };
    let out = basin_hopping(objective, &x0, config.hopping).ok_or(Error::AllFailed(config.hopping.n_hops + 1))?;
    let params = lik.from_free(&out.x);
    Ok(MixtureEstimate {
        params,
        log_likelihood: -out.value * w,
        mean_log_likelihood: -out.value,
        gradient_norm: out.gradient_norm,
        status: out.status,
        hops: config.hopping.n_hops,
        accepted_hops: out.accepted,
        failed_hops: out.failures,
        trace: out.trace,
    })
}
