use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::logistic::{cdf, interval};
use crate::mlogit::ProbabilityProfile;
use crate::scale::ResponseScale;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CutoffMode {
    /// Both low-type cutoffs are free parameters.
    #[default]
    Free,
    /// Low-type cutoffs sit at midpoints of fixed pairs of high-type thresholds.
    Tied,
}

/// Two-type mixture of ordered logits. The high type reports on the full
/// scale; the low type reports only focal values, with two cutoffs on the
/// same latent index. The high-type weight is `F(z'beta_n - alpha_n)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MixtureParams {
    pub scale: ResponseScale,
    pub mode: CutoffMode,
    pub alpha_n: f64,
    pub numeracy_names: Vec<String>,
    pub beta_n: Vec<f64>,
    pub wellbeing_names: Vec<String>,
    pub beta_s: Vec<f64>,
    /// Lowest high-type threshold.
    pub high_first: f64,
    /// Positive gaps between consecutive high-type thresholds.
    pub high_steps: Vec<f64>,
    /// Lower low-type cutoff (free mode only).
    pub low_first: f64,
    /// Positive gap to the upper low-type cutoff (free mode only).
    pub low_step: f64,
}

impl MixtureParams {
    /// Builds parameters from explicit thresholds. In tied mode `low` is ignored.
    #[allow(clippy::too_many_arguments)]
    pub fn from_thresholds(
        scale: ResponseScale,
        mode: CutoffMode,
        alpha_n: f64,
        numeracy: (Vec<String>, Vec<f64>),
        wellbeing: (Vec<String>, Vec<f64>),
        high: &[f64],
        low: (f64, f64),
    ) -> Result<Self> {
        if high.len() + 1 != scale.n_categories() {
            return Err(Error::InvalidParameters(format!(
                "expected {} high-type thresholds, got {}",
                scale.n_categories() - 1,
                high.len()
            )));
        }
        let p = Self {
            scale,
            mode,
            alpha_n,
            numeracy_names: numeracy.0,
            beta_n: numeracy.1,
            wellbeing_names: wellbeing.0,
            beta_s: wellbeing.1,
            high_first: high[0],
            high_steps: high.windows(2).map(|w| w[1] - w[0]).collect(),
            low_first: low.0,
            low_step: low.1 - low.0,
        };
        p.validate()?;
        let mut p = p;
        if mode == CutoffMode::Tied {
            let (lo, hi) = p.low_cutoffs();
            p.low_first = lo;
            p.low_step = hi - lo;
        }
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if self.numeracy_names.len() != self.beta_n.len() || self.wellbeing_names.len() != self.beta_s.len() {
            return Err(Error::InvalidParameters("coefficient names and values differ in length".into()));
        }
        if self.high_steps.len() + 2 != self.scale.n_categories() {
            return Err(Error::InvalidParameters("wrong number of high-type threshold steps".into()));
        }
        if self.high_steps.iter().any(|s| !(*s > 0.0)) {
            return Err(Error::InvalidParameters("high-type thresholds must be strictly increasing".into()));
        }
        if self.mode == CutoffMode::Free && !(self.low_step > 0.0) {
            return Err(Error::InvalidParameters("low-type cutoffs must be strictly increasing".into()));
        }
        let all = [self.alpha_n, self.high_first, self.low_first, self.low_step];
        if all.iter().chain(&self.beta_n).chain(&self.beta_s).chain(&self.high_steps).any(|v| !v.is_finite()) {
            return Err(Error::InvalidParameters("non-finite parameter".into()));
        }
        Ok(())
    }

    /// High-type thresholds; entry `k` separates scale positions `k` and `k + 1`.
    pub fn high_thresholds(&self) -> Vec<f64> {
        let mut t = Vec::with_capacity(self.high_steps.len() + 1);
        let mut acc = self.high_first;
        t.push(acc);
        for s in &self.high_steps {
            acc += s;
            t.push(acc);
        }
        t
    }

    /// Lower and upper low-type cutoffs.
    pub fn low_cutoffs(&self) -> (f64, f64) {
        match self.mode {
            CutoffMode::Free => (self.low_first, self.low_first + self.low_step),
            CutoffMode::Tied => {
                let t = self.high_thresholds();
                let [(a, b), (c, d)] = self.scale.tied_cutoff_pairs();
                (0.5 * (t[a] + t[b]), 0.5 * (t[c] + t[d]))
            }
        }
    }

    pub fn wellbeing_index(&self, x: &[f64]) -> f64 {
        self.beta_s.iter().zip(x).map(|(b, v)| b * v).sum()
    }

    /// Probability of the high (full-scale) type.
    pub fn p_high(&self, z: &[f64]) -> f64 {
        cdf(self.beta_n.iter().zip(z).map(|(b, v)| b * v).sum::<f64>() - self.alpha_n)
    }

    fn check_lengths(&self, x: &[f64], z: &[f64]) -> Result<()> {
        if x.len() != self.beta_s.len() || z.len() != self.beta_n.len() {
            return Err(Error::InvalidParameters(format!(
                "covariate vectors of length ({}, {}) do not match coefficients ({}, {})",
                x.len(),
                z.len(),
                self.beta_s.len(),
                self.beta_n.len()
            )));
        }
        Ok(())
    }

    /// Probability of every response value.
    pub fn category_probs(&self, x: &[f64], z: &[f64]) -> Result<ProbabilityProfile> {
        self.check_lengths(x, z)?;
        let eta = self.wellbeing_index(x);
        let pi = self.p_high(z);
        let tau = self.high_thresholds();
        let (lo, hi) = self.low_cutoffs();
        let [f_lo, f_mid, f_hi] = self.scale.focal_indices();
        let n = self.scale.n_categories();
        let probs = (0..n)
            .map(|c| {
                let upper = if c + 1 < n { tau[c] - eta } else { f64::INFINITY };
                let lower = if c > 0 { tau[c - 1] - eta } else { f64::NEG_INFINITY };
                let low = if c == f_lo {
                    cdf(lo - eta)
                } else if c == f_mid {
                    interval(hi - eta, lo - eta)
                } else if c == f_hi {
                    cdf(eta - hi)
                } else {
                    0.0
                };
                pi * interval(upper, lower) + (1.0 - pi) * low
            })
            .collect();
        Ok(ProbabilityProfile::new(self.scale.min_value(), probs))
    }

    /// Flat values in natural coordinates with their names: `alpha_n`,
    /// numeracy and well-being slopes, first high threshold, high steps, and
    /// in free mode the lower low cutoff and its step.
    pub fn named_values(&self) -> Vec<(String, f64)> {
        let mut out = vec![("alpha_n".to_string(), self.alpha_n)];
        out.extend(self.numeracy_names.iter().zip(&self.beta_n).map(|(n, v)| (format!("numeracy:{n}"), *v)));
        out.extend(self.wellbeing_names.iter().zip(&self.beta_s).map(|(n, v)| (format!("wellbeing:{n}"), *v)));
        out.push(("high_threshold_0".into(), self.high_first));
        out.extend(self.high_steps.iter().enumerate().map(|(i, v)| (format!("high_step_{}", i + 1), *v)));
        if self.mode == CutoffMode::Free {
            out.push(("low_cutoff_lower".into(), self.low_first));
            out.push(("low_step".into(), self.low_step));
        }
        out
    }

    /// Inverse of [`Self::named_values`] for a vector with the same layout.
    pub fn with_values(&self, values: &[f64]) -> Result<Self> {
        if values.len() != self.named_values().len() {
            return Err(Error::InvalidParameters("value vector has the wrong length".into()));
        }
        let (j, k, m) = (self.beta_n.len(), self.beta_s.len(), self.high_steps.len());
        let mut p = self.clone();
        p.alpha_n = values[0];
        p.beta_n = values[1..1 + j].to_vec();
        p.beta_s = values[1 + j..1 + j + k].to_vec();
        p.high_first = values[1 + j + k];
        p.high_steps = values[2 + j + k..2 + j + k + m].to_vec();
        if p.mode == CutoffMode::Free {
            p.low_first = values[2 + j + k + m];
            p.low_step = values[3 + j + k + m];
        } else {
            let (lo, hi) = p.low_cutoffs();
            p.low_first = lo;
            p.low_step = hi - lo;
        }
        Ok(p)
    }

    pub fn wellbeing(&self, name: &str) -> Option<f64> {
        self.wellbeing_names.iter().position(|n| n == name).map(|i| self.beta_s[i])
    }

    pub fn numeracy(&self, name: &str) -> Option<f64> {
        self.numeracy_names.iter().position(|n| n == name).map(|i| self.beta_n[i])
    }
}

/// Probability of response `s` for well-being covariates `x` and numeracy
/// covariates `z`.
pub fn mixture_response_prob(params: &MixtureParams, x: &[f64], z: &[f64], s: i32) -> Result<f64> {
    let scale = params.scale;
    if !scale.contains(s) {
        return Err(Error::OutOfScale { value: s, min: scale.min_value(), max: scale.max_value() });
    }
    Ok(params.category_probs(x, z)?.get(s))
}
