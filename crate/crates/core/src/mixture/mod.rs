//! Two-type finite mixture for focal-value responding: estimation by basin
//! hopping, bootstrap inference, and numeracy predictions.

mod bootstrap;
mod fit;
mod likelihood;
mod params;

pub use bootstrap::{bootstrap_fit, BootstrapOptions, MixtureFit, NamedEstimate, Replicate};
pub use fit::{fit_mixture, initial_params, MixtureConfig, MixtureEstimate};
pub use likelihood::{log_likelihood, log_likelihood_gradient, MixtureLikelihood, PROB_FLOOR};
pub use params::{mixture_response_prob, CutoffMode, MixtureParams};

use serde::{Deserialize, Serialize};

use crate::data::SurveyDataset;
use crate::error::Result;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NumeracyEffect {
    pub covariate: String,
    pub coefficient: f64,
    /// Percent fall in the odds of the low type per unit of the covariate,
    /// `100 * (1 - exp(-coefficient))`.
    pub low_odds_decrease_pct: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NumeracyPrediction {
    pub p_high: Vec<f64>,
    pub mean_p_high: f64,
    pub effects: Vec<NumeracyEffect>,
}

pub fn low_odds_decrease_pct(coefficient: f64) -> f64 {
    -100.0 * (-coefficient).exp_m1()
}

/// High-type probability for every row plus per-covariate odds effects.
pub fn predict_numeracy(params: &MixtureParams, ds: &SurveyDataset) -> Result<NumeracyPrediction> {
    let z = ds.row_major(&params.numeracy_names)?;
    let j = params.numeracy_names.len();
    let p_high: Vec<f64> = (0..ds.n_rows()).map(|i| params.p_high(&z[i * j..(i + 1) * j])).collect();
    let total = ds.total_weight();
    let mean_p_high = p_high.iter().zip(ds.weights()).map(|(p, w)| p * w).sum::<f64>() / total;
    let effects = params
        .numeracy_names
        .iter()
        .zip(&params.beta_n)
        .map(|(name, &b)| NumeracyEffect { covariate: name.clone(), coefficient: b, low_odds_decrease_pct: low_odds_decrease_pct(b) })
        .collect();
    Ok(NumeracyPrediction { p_high, mean_p_high, effects })
}
