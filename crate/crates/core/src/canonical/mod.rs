//! Baseline ("canonical") estimators: OLS on cardinal responses, ordered
//! logit, binary logits on adjacent response pairs, and the subset models.

mod logit;
mod ologit;
mod ols;

pub use logit::fit_binary_logit;
pub use ologit::{fit_ordered_logit, ordered_logit_probs, OrderedLogitLikelihood};
pub use ols::fit_ols;

use serde::{Deserialize, Serialize};

use crate::data::{Selector, SurveyDataset};
use crate::error::{Error, Result};
use crate::exec::{self, Execution};

pub const CONSTANT: &str = "constant";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FitKind {
    Ols,
    OrderedLogit,
    BinaryLogit,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Coefficient {
    pub name: String,
    pub estimate: f64,
    pub se: f64,
}

impl Coefficient {
    pub fn z(&self) -> f64 {
        self.estimate / self.se
    }

    /// Two-sided 95% significance under the normal approximation.
    pub fn significant_95(&self) -> bool {
        self.z().abs() > 1.959963984540054
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CanonicalFit {
    pub kind: FitKind,
    pub coefficients: Vec<Coefficient>,
    /// Ordered logit only; `thresholds[k]` separates `categories[k]` and `categories[k + 1]`.
    pub thresholds: Vec<Coefficient>,
    pub categories: Vec<i32>,
    pub log_likelihood: Option<f64>,
    pub rss: Option<f64>,
    pub r2: Option<f64>,
    pub adjusted_r2: Option<f64>,
    pub pseudo_r2: Option<f64>,
    pub n_obs: usize,
    pub sum_weights: f64,
    pub iterations: usize,
    /// Covariates removed because they were constant in the estimation sample.
    pub dropped: Vec<String>,
}

impl CanonicalFit {
    pub fn coef(&self, name: &str) -> Option<&Coefficient> {
        self.coefficients.iter().find(|c| c.name == name)
    }
}

/// Rejects fits whose coefficients diverge: more than 30 logits per
/// standard deviation of the covariate.
pub(crate) fn check_separation(ds: &SurveyDataset, names: &[String], beta: &[f64]) -> Result<()> {
    let mut worst = 0.0f64;
    for (name, b) in names.iter().zip(beta) {
        let col = ds.column(name)?;
        let sd = weighted_sd(col, ds.weights());
        worst = worst.max(b.abs() * sd.max(1e-300));
    }
    if worst > 30.0 || !worst.is_finite() {
        return Err(Error::Separation { norm: worst });
    }
    Ok(())
}

pub(crate) fn weighted_sd(col: &[f64], w: &[f64]) -> f64 {
    let sw: f64 = w.iter().sum();
    let mean = col.iter().zip(w).map(|(x, w)| x * w).sum::<f64>() / sw;
    let var = col.iter().zip(w).map(|(x, w)| w * (x - mean).powi(2)).sum::<f64>() / sw;
    var.sqrt()
}

/// Binary logit for one adjacent pair `(lower, lower + 1)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairFit {
    pub lower: i32,
    pub upper: i32,
    pub fit: CanonicalFit,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SkippedPair {
    pub lower: i32,
    pub upper: i32,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepwiseFits {
    pub fits: Vec<PairFit>,
    pub skipped: Vec<SkippedPair>,
}

impl StepwiseFits {
    pub fn pair(&self, lower: i32) -> Option<&CanonicalFit> {
        self.fits.iter().find(|p| p.lower == lower).map(|p| &p.fit)
    }
}

/// Independent binary logits of choosing `j + 1` over `j` for every adjacent
/// pair of the scale. Pairs lacking one of the outcomes, or separated, are
/// skipped and reported.
pub fn fit_stepwise_logits(ds: &SurveyDataset, covariates: &[String], exec: Execution) -> Result<StepwiseFits> {
    let scale = *ds.scale();
    let lowers: Vec<i32> = (scale.min_value()..scale.max_value()).collect();
    let results = exec::map_indexed(exec, lowers.len(), |i| {
        let j = lowers[i];
        let sub = ds.subset(Selector::Pair(j)).map_err(|e| e.to_string())?;
        let ind = sub.indicator().expect("pair selector attaches indicator");
        if ind.iter().all(|&v| v == 1) || ind.iter().all(|&v| v == 0) {
            return Err("only one outcome present".to_string());
        }
        fit_binary_logit(&sub, covariates).map_err(|e| e.to_string())
    });
    let mut out = StepwiseFits { fits: Vec::new(), skipped: Vec::new() };
    for (j, r) in lowers.into_iter().zip(results) {
        match r {
            Ok(fit) => out.fits.push(PairFit { lower: j, upper: j + 1, fit }),
            Err(reason) => out.skipped.push(SkippedPair { lower: j, upper: j + 1, reason }),
        }
    }
    if out.fits.is_empty() {
        return Err(Error::InvalidData("no adjacent response pair could be estimated".into()));
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubsetColumn {
    pub label: String,
    pub sample: String,
    pub fit: CanonicalFit,
}

/// The five subset models: ordered logit and OLS on the full sample, OLS
/// without focal responses, and ordered logits on the two non-focal
/// interior ranges.
pub fn fit_subset_models(ds: &SurveyDataset, covariates: &[String]) -> Result<Vec<SubsetColumn>> {
    let [lo, mid, hi] = ds.scale().focal_values();
    let lower = ds.subset(Selector::Range(lo + 1, mid - 1))?;
    let upper = ds.subset(Selector::Range(mid + 1, hi - 1))?;
    let nonfocal = ds.subset(Selector::DropFocal)?;
    let col = |label: &str, sample: String, fit| SubsetColumn { label: label.into(), sample, fit };
    Ok(vec![
        col("ologit", "all".into(), fit_ordered_logit(ds, covariates)?),
        col("ols", "all".into(), fit_ols(ds, covariates)?),
        col("ols", "non-focal".into(), fit_ols(&nonfocal, covariates)?),
        col("ologit", format!("{}..{}", lo + 1, mid - 1), fit_ordered_logit(&lower, covariates)?),
        col("ologit", format!("{}..{}", mid + 1, hi - 1), fit_ordered_logit(&upper, covariates)?),
    ])
}
