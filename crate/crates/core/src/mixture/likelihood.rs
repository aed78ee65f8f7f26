//! Weighted mixture log-likelihood and its analytic gradient in the
//! unconstrained parameterization used by the optimizer.
//!
//! Free vector layout: `[alpha_n, beta_n.., beta_s.., tau_0, ln(step_1)..
//! ln(step_{n-2})]`, followed in free mode by `[low_cutoff, ln(low_step)]`.

use super::params::{CutoffMode, MixtureParams};
use crate::data::SurveyDataset;
use crate::error::{Error, Result};
use crate::exec::{self, Execution};
use crate::logistic::{cdf, interval, pdf};
use crate::scale::ResponseScale;

/// Per-observation probability floor.
pub const PROB_FLOOR: f64 = 1e-300;

#[derive(Debug, Clone)]
pub struct MixtureLikelihood {
    x: Vec<f64>,
    k: usize,
    z: Vec<f64>,
    j: usize,
    cat: Vec<usize>,
    w: Vec<f64>,
    total_weight: f64,
    scale: ResponseScale,
    mode: CutoffMode,
    exec: Execution,
    x_center: Vec<f64>,
    z_center: Vec<f64>,
    wellbeing: Vec<String>,
    numeracy: Vec<String>,
}

/// Decoded working parameters.
struct Working {
    alpha: f64,
    beta_n: Vec<f64>,
    beta_s: Vec<f64>,
    tau: Vec<f64>,
    steps: Vec<f64>,
    low: (f64, f64),
    low_step: f64,
}

impl MixtureLikelihood {
    /// With `centered`, covariates are demeaned internally; parameters passed
    /// in and out are always in the original coordinates.
    pub fn new(
        ds: &SurveyDataset,
        wellbeing: &[String],
        numeracy: &[String],
        mode: CutoffMode,
        exec: Execution,
        centered: bool,
    ) -> Result<Self> {
        let scale = *ds.scale();
        let mut x = ds.row_major(wellbeing)?;
        let mut z = ds.row_major(numeracy)?;
        let (k, j) = (wellbeing.len(), numeracy.len());
        let n = ds.n_rows();
        let total_weight = ds.total_weight();
        let w = ds.weights().to_vec();
        let center = |m: &[f64], width: usize| -> Vec<f64> {
            (0..width).map(|c| (0..n).map(|i| w[i] * m[i * width + c]).sum::<f64>() / total_weight).collect()
        };
        let (x_center, z_center) = if centered { (center(&x, k), center(&z, j)) } else { (vec![0.0; k], vec![0.0; j]) };
        for i in 0..n {
            for c in 0..k {
                x[i * k + c] -= x_center[c];
            }
            for c in 0..j {
                z[i * j + c] -= z_center[c];
            }
        }
        let cat = ds.responses().iter().map(|&s| scale.index_of(s).expect("validated responses")).collect();
        Ok(Self {
            x,
            k,
            z,
            j,
            cat,
            w,
            total_weight,
            scale,
            mode,
            exec,
            x_center,
            z_center,
            wellbeing: wellbeing.to_vec(),
            numeracy: numeracy.to_vec(),
        })
    }

    /// Likelihood for the covariates named in `params`, uncentered.
    pub fn for_params(params: &MixtureParams, ds: &SurveyDataset, exec: Execution) -> Result<Self> {
        if params.scale != *ds.scale() {
            return Err(Error::InvalidParameters("parameter scale differs from the dataset scale".into()));
        }
        Self::new(ds, &params.wellbeing_names, &params.numeracy_names, params.mode, exec, false)
    }

    pub fn n_free(&self) -> usize {
        let base = 1 + self.j + self.k + self.scale.n_categories() - 1;
        base + if self.mode == CutoffMode::Free { 2 } else { 0 }
    }

    pub fn total_weight(&self) -> f64 {
        self.total_weight
    }

    fn n_thresholds(&self) -> usize {
        self.scale.n_categories() - 1
    }

    /// Free vector for `params` in this likelihood's (possibly centered) coordinates.
    pub fn to_free(&self, params: &MixtureParams) -> Result<Vec<f64>> {
        params.validate()?;
        if params.beta_s.len() != self.k || params.beta_n.len() != self.j || params.mode != self.mode {
            return Err(Error::InvalidParameters("parameters do not match the likelihood layout".into()));
        }
        let xs: f64 = params.beta_s.iter().zip(&self.x_center).map(|(b, c)| b * c).sum();
        let zs: f64 = params.beta_n.iter().zip(&self.z_center).map(|(b, c)| b * c).sum();
        let mut v = vec![params.alpha_n - zs];
        v.extend_from_slice(&params.beta_n);
        v.extend_from_slice(&params.beta_s);
        v.push(params.high_first - xs);
        v.extend(params.high_steps.iter().map(|s| s.ln()));
        if self.mode == CutoffMode::Free {
            v.push(params.low_first - xs);
            v.push(params.low_step.ln());
        }
        Ok(v)
    }

    fn decode(&self, theta: &[f64]) -> Working {
        let (j, k, m) = (self.j, self.k, self.n_thresholds());
        let beta_n = theta[1..1 + j].to_vec();
        let beta_s = theta[1 + j..1 + j + k].to_vec();
        let first = 1 + j + k;
        let steps: Vec<f64> = theta[first + 1..first + m].iter().map(|v| v.exp()).collect();
        let mut tau = Vec::with_capacity(m);
        let mut acc = theta[first];
        tau.push(acc);
        for s in &steps {
            acc += s;
            tau.push(acc);
        }
        let (low, low_step) = match self.mode {
            CutoffMode::Free => {
                let d = theta[first + m + 1].exp();
                ((theta[first + m], theta[first + m] + d), d)
            }
            CutoffMode::Tied => {
                let [(a, b), (c, d)] = self.scale.tied_cutoff_pairs();
                let lo = 0.5 * (tau[a] + tau[b]);
                let hi = 0.5 * (tau[c] + tau[d]);
                ((lo, hi), hi - lo)
            }
        };
        Working { alpha: theta[0], beta_n, beta_s, tau, steps, low, low_step }
    }

    /// Parameters in original coordinates for a free vector.
    pub fn from_free(&self, theta: &[f64]) -> MixtureParams {
        let wk = self.decode(theta);
        let xs: f64 = wk.beta_s.iter().zip(&self.x_center).map(|(b, c)| b * c).sum();
        let zs: f64 = wk.beta_n.iter().zip(&self.z_center).map(|(b, c)| b * c).sum();
        MixtureParams {
            scale: self.scale,
            mode: self.mode,
            alpha_n: wk.alpha + zs,
            numeracy_names: self.numeracy.clone(),
            beta_n: wk.beta_n,
            wellbeing_names: self.wellbeing.clone(),
            beta_s: wk.beta_s,
            high_first: wk.tau[0] + xs,
            high_steps: wk.steps,
            low_first: wk.low.0 + xs,
            low_step: wk.low_step,
        }
    }

    /// Total weighted log-likelihood and its gradient in free coordinates.
    pub fn value_and_gradient(&self, theta: &[f64]) -> (f64, Vec<f64>) {
        let wk = self.decode(theta);
        let (j, k, m) = (self.j, self.k, self.n_thresholds());
        // natural gradient: [alpha, beta_n, beta_s, tau (m), low_lo, low_hi]
        let dim = 1 + j + k + m + 2;
        let [f_lo, f_mid, f_hi] = self.scale.focal_indices();
        let parts = exec::map_chunks(self.exec, self.cat.len(), |range| {
            let mut v = 0.0;
            let mut g = vec![0.0; dim];
            for i in range {
                let xi = &self.x[i * k..(i + 1) * k];
                let zi = &self.z[i * j..(i + 1) * j];
                let eta: f64 = wk.beta_s.iter().zip(xi).map(|(b, x)| b * x).sum();
                let u: f64 = wk.beta_n.iter().zip(zi).map(|(b, z)| b * z).sum::<f64>() - wk.alpha;
                let pi = cdf(u);
                let c = self.cat[i];
                let a = if c < m { wk.tau[c] - eta } else { f64::INFINITY };
                let b = if c > 0 { wk.tau[c - 1] - eta } else { f64::NEG_INFINITY };
                let ph = interval(a, b);
                let (lu, ll) = if c == f_lo {
                    (wk.low.0 - eta, f64::NEG_INFINITY)
                } else if c == f_mid {
                    (wk.low.1 - eta, wk.low.0 - eta)
                } else if c == f_hi {
                    (f64::INFINITY, wk.low.1 - eta)
                } else {
                    (f64::NEG_INFINITY, f64::NEG_INFINITY)
                };
                let pl = if lu == f64::NEG_INFINITY { 0.0 } else { interval(lu, ll) };
                let p = pi * ph + (1.0 - pi) * pl;
                let w = self.w[i];
                if !(p >= PROB_FLOOR) {
                    v += w * PROB_FLOOR.ln();
                    continue;
                }
                v += w * p.ln();
                let s = w / p;
                let (fa, fb) = (pdf(a), pdf(b));
                let (flu, fll) = (pdf(lu), pdf(ll));
                let q = 1.0 - pi;
                let dpi = s * (ph - pl) * pdf(u);
                g[0] -= dpi;
                for (gz, z) in g[1..1 + j].iter_mut().zip(zi) {
                    *gz += dpi * z;
                }
                let deta = -s * (pi * (fa - fb) + q * (flu - fll));
                for (gx, x) in g[1 + j..1 + j + k].iter_mut().zip(xi) {
                    *gx += deta * x;
                }
                let t0 = 1 + j + k;
                if c < m {
                    g[t0 + c] += s * pi * fa;
                }
                if c > 0 {
                    g[t0 + c - 1] -= s * pi * fb;
                }
                let (lo_i, hi_i) = (t0 + m, t0 + m + 1);
                if c == f_lo {
                    g[lo_i] += s * q * flu;
                } else if c == f_mid {
                    g[hi_i] += s * q * flu;
                    g[lo_i] -= s * q * fll;
                } else if c == f_hi {
                    g[hi_i] -= s * q * fll;
                }
            }
            (v, g)
        });
        let (value, nat) = exec::sum_value_gradient(parts, dim);
        (value, self.chain(&wk, nat))
    }

    /// Maps the natural-coordinate gradient to free coordinates.
    fn chain(&self, wk: &Working, mut nat: Vec<f64>) -> Vec<f64> {
        let (j, k, m) = (self.j, self.k, self.n_thresholds());
        let t0 = 1 + j + k;
        let (g_lo, g_hi) = (nat[t0 + m], nat[t0 + m + 1]);
        let mut out = nat[..t0].to_vec();
        if self.mode == CutoffMode::Tied {
            let [(a, b), (c, d)] = self.scale.tied_cutoff_pairs();
            nat[t0 + a] += 0.5 * g_lo;
            nat[t0 + b] += 0.5 * g_lo;
            nat[t0 + c] += 0.5 * g_hi;
            nat[t0 + d] += 0.5 * g_hi;
        }
        let tau_grad = &nat[t0..t0 + m];
        let mut suffix = vec![0.0; m + 1];
        for idx in (0..m).rev() {
            suffix[idx] = suffix[idx + 1] + tau_grad[idx];
        }
        out.push(suffix[0]);
        for (s, step) in wk.steps.iter().enumerate() {
            out.push(step * suffix[s + 1]);
        }
        if self.mode == CutoffMode::Free {
            out.push(g_lo + g_hi);
            out.push(wk.low_step * g_hi);
        }
        out
    }

    pub fn value(&self, theta: &[f64]) -> f64 {
        self.value_and_gradient(theta).0
    }
}

/// Weighted log-likelihood of `params` on `ds`.
pub fn log_likelihood(params: &MixtureParams, ds: &SurveyDataset) -> Result<f64> {
    let lik = MixtureLikelihood::for_params(params, ds, Execution::Parallel)?;
    Ok(lik.value(&lik.to_free(params)?))
}

/// Gradient of [`log_likelihood`] in the free parameterization (log-scale
/// steps; no low-type entries in tied mode).
pub fn log_likelihood_gradient(params: &MixtureParams, ds: &SurveyDataset) -> Result<Vec<f64>> {
    let lik = MixtureLikelihood::for_params(params, ds, Execution::Parallel)?;
    Ok(lik.value_and_gradient(&lik.to_free(params)?).1)
}
