//! Forward simulation of the two-type reporting model with a simple
//! education and income covariate model.

use std::io::Write;

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::data::{format_real, SurveyDataset, EDUCATION, INCOME};
use crate::error::{Error, Result};
use crate::exec::{self, Execution};
use crate::mixture::{CutoffMode, MixtureParams};
use crate::mlogit::ProbabilityProfile;
use crate::scale::ResponseScale;

/// Education level (1-4) probabilities and normal ln-income given education.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CovariateModel {
    pub education_probs: [f64; 4],
    pub income_means: [f64; 4],
    pub income_sd: f64,
}

impl Default for CovariateModel {
    fn default() -> Self {
        Self { education_probs: [0.15, 0.3, 0.3, 0.25], income_means: [10.2, 10.5, 10.7, 11.0], income_sd: 0.7 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DgpSpec {
    pub params: MixtureParams,
    #[serde(default)]
    pub covariates: CovariateModel,
    pub n: usize,
    #[serde(default)]
    pub seed: u64,
}

/// Per-row latent truth.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LatentRecord {
    pub high_type: bool,
    /// Well-being index plus logistic noise.
    pub s_star: f64,
    /// Numeracy index `z'beta_n - alpha_n` plus logistic noise; positive means high type.
    pub n_star: f64,
}

#[derive(Debug, Clone)]
pub struct GeneratedData {
    pub dataset: SurveyDataset,
    pub latent: Vec<LatentRecord>,
}

impl DgpSpec {
    /// Two-type model with slope values of a Canadian-survey-like fit:
    /// well-being (ln income 0.55, education -0.008), numeracy (0.41, 0.22,
    /// threshold 3.1), low-type cutoffs inside the (2,3) and (6,7) high-type gaps.
    pub fn survey_like(n: usize, seed: u64) -> Self {
        let steps = [0.38, 0.66, 0.60, 0.58, 0.67, 0.77, 1.18, 1.64, 1.41];
        let mut tau = vec![1.0];
        for s in steps {
            tau.push(tau.last().unwrap() + s);
        }
        let names = vec![INCOME.to_string(), EDUCATION.to_string()];
        let params = MixtureParams::from_thresholds(
            ResponseScale::zero_to_ten(),
            CutoffMode::Free,
            3.1,
            (names.clone(), vec![0.41, 0.22]),
            (names, vec![0.55, -0.008]),
            &tau,
            (2.3, 5.2),
        )
        .expect("valid default parameters");
        Self { params, covariates: CovariateModel::default(), n, seed }
    }

    pub fn validate(&self) -> Result<()> {
        self.params.validate()?;
        let cm = &self.covariates;
        let sum: f64 = cm.education_probs.iter().sum();
        if cm.education_probs.iter().any(|p| !(*p >= 0.0)) || (sum - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidConfig("education probabilities must be nonnegative and sum to one".into()));
        }
        if !(cm.income_sd > 0.0) || cm.income_means.iter().any(|m| !m.is_finite()) {
            return Err(Error::InvalidConfig("income model needs finite means and a positive SD".into()));
        }
        if self.n == 0 {
            return Err(Error::InvalidConfig("n must be at least 1".into()));
        }
        for name in self.params.wellbeing_names.iter().chain(&self.params.numeracy_names) {
            if name != INCOME && name != EDUCATION {
                return Err(Error::UnknownCovariate(name.clone()));
            }
        }
        Ok(())
    }
}

fn logistic_cdf(t: f64) -> f64 {
    1.0 / (1.0 + (-t).exp())
}

fn covariate_value(name: &str, income: f64, education: f64) -> f64 {
    if name == INCOME {
        income
    } else {
        education
    }
}

fn index(names: &[String], beta: &[f64], income: f64, education: f64) -> f64 {
    names.iter().zip(beta).map(|(n, b)| b * covariate_value(n, income, education)).sum()
}

/// Response probabilities for one individual, evaluated directly from the
/// model definition. `x` and `z` follow the parameter name order.
pub fn analytic_category_probs(spec: &DgpSpec, x: &[f64], z: &[f64]) -> Result<ProbabilityProfile> {
    let p = &spec.params;
    if x.len() != p.beta_s.len() || z.len() != p.beta_n.len() {
        return Err(Error::InvalidParameters("covariate vector length mismatch".into()));
    }
    let eta: f64 = x.iter().zip(&p.beta_s).map(|(a, b)| a * b).sum();
    let share_high = logistic_cdf(z.iter().zip(&p.beta_n).map(|(a, b)| a * b).sum::<f64>() - p.alpha_n);
    let tau = p.high_thresholds();
    let (lo, hi) = p.low_cutoffs();
    let n = p.scale.n_categories();
    // cumulative probabilities below each threshold, then differences
    let mut cum = vec![0.0; n + 1];
    for (k, t) in tau.iter().enumerate() {
        cum[k + 1] = logistic_cdf(t - eta);
    }
    cum[n] = 1.0;
    let [f_lo, f_mid, f_hi] = p.scale.focal_indices();
    let low_lo = logistic_cdf(lo - eta);
    let low_hi = logistic_cdf(hi - eta);
    let probs = (0..n)
        .map(|c| {
            let low = match c {
                _ if c == f_lo => low_lo,
                _ if c == f_mid => low_hi - low_lo,
                _ if c == f_hi => 1.0 - low_hi,
                _ => 0.0,
            };
            share_high * (cum[c + 1] - cum[c]) + (1.0 - share_high) * low
        })
        .collect();
    Ok(ProbabilityProfile::new(p.scale.min_value(), probs))
}

fn logistic_draw<R: Rng>(rng: &mut R) -> f64 {
    let u: f64 = rng.random_range(f64::MIN_POSITIVE..1.0);
    (u / (1.0 - u)).ln()
}

/// Draws `spec.n` rows. Row `i` uses RNG stream `i` of `spec.seed`, so the
/// output does not depend on the execution mode.
pub fn generate(spec: &DgpSpec, exec: Execution) -> Result<GeneratedData> {
    spec.validate()?;
    let p = &spec.params;
    let cm = &spec.covariates;
    let tau = p.high_thresholds();
    let (lo, hi) = p.low_cutoffs();
    let scale = p.scale;
    let focal = scale.focal_values();
    let rows = exec::map_indexed(exec, spec.n, |i| {
        let mut rng = exec::stream_rng(spec.seed, i as u64);
        let u: f64 = rng.random();
        let mut acc = 0.0;
        let mut level = 4;
        for (l, q) in cm.education_probs.iter().enumerate() {
            acc += q;
            if u < acc {
                level = l + 1;
                break;
            }
        }
        let z_draw: f64 = StandardNormal.sample(&mut rng);
        let income = cm.income_means[level - 1] + cm.income_sd * z_draw;
        let education = level as f64;
        let n_star = index(&p.numeracy_names, &p.beta_n, income, education) - p.alpha_n + logistic_draw(&mut rng);
        let s_star = index(&p.wellbeing_names, &p.beta_s, income, education) + logistic_draw(&mut rng);
        let high_type = n_star > 0.0;
        let response = if high_type {
            scale.min_value() + tau.iter().filter(|t| **t < s_star).count() as i32
        } else if s_star < lo {
            focal[0]
        } else if s_star < hi {
            focal[1]
        } else {
            focal[2]
        };
        (response, income, education, LatentRecord { high_type, s_star, n_star })
    });
    let responses = rows.iter().map(|r| r.0).collect();
    let income = rows.iter().map(|r| r.1).collect();
    let education = rows.iter().map(|r| r.2).collect();
    let latent = rows.iter().map(|r| r.3).collect();
    let dataset = SurveyDataset::new(
        responses,
        vec![INCOME.to_string(), EDUCATION.to_string()],
        vec![income, education],
        None,
        scale,
    )?
    .with_numeracy_covariates(&p.numeracy_names)?;
    Ok(GeneratedData { dataset, latent })
}

/// Writes the latent record as delimited text with a `row` column.
pub fn write_latent<W: Write>(latent: &[LatentRecord], writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["row", "high_type", "s_star", "n_star"])?;
    for (i, r) in latent.iter().enumerate() {
        w.write_record([i.to_string(), u8::from(r.high_type).to_string(), format_real(r.s_star), format_real(r.n_star)])?;
    }
    w.flush().map_err(|e| Error::Io { path: "<latent>".into(), source: e })?;
    Ok(())
}
