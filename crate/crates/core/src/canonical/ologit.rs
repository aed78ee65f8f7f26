use nalgebra::{DMatrix, DVector};

use super::{check_separation, CanonicalFit, Coefficient, FitKind};
use crate::data::SurveyDataset;
use crate::error::{Error, Result};
use crate::logistic::{self, interval, pdf, pdf_prime};
use crate::optim::{self, Concave, NewtonOptions};

/// Weighted ordered-logit log-likelihood over the observed categories.
/// Parameters are `[beta (K), thresholds (m - 1)]`; there is no constant.
#[derive(Debug, Clone)]
pub struct OrderedLogitLikelihood {
    x: Vec<f64>,
    k: usize,
    category: Vec<usize>,
    weights: Vec<f64>,
    total_weight: f64,
    categories: Vec<i32>,
}

impl OrderedLogitLikelihood {
    pub fn new(ds: &SurveyDataset, covariates: &[String]) -> Result<Self> {
        let mut categories: Vec<i32> = ds.responses().to_vec();
        categories.sort_unstable();
        categories.dedup();
        if categories.len() < 2 {
            return Err(Error::TooFewCategories);
        }
        let category = ds
            .responses()
            .iter()
            .map(|s| categories.binary_search(s).expect("category list built from responses"))
            .collect();
        Ok(Self {
            x: ds.row_major(covariates)?,
            k: covariates.len(),
            category,
            weights: ds.weights().to_vec(),
            total_weight: ds.total_weight(),
            categories,
        })
    }

    pub fn categories(&self) -> &[i32] {
        &self.categories
    }

    pub fn n_params(&self) -> usize {
        self.k + self.categories.len() - 1
    }

    fn n_obs(&self) -> usize {
        self.category.len()
    }

    /// Total weighted log-likelihood; `-inf` when thresholds are not increasing.
    pub fn log_likelihood(&self, theta: &[f64]) -> f64 {
        let (beta, tau) = theta.split_at(self.k);
        if tau.windows(2).any(|w| w[1] <= w[0]) {
            return f64::NEG_INFINITY;
        }
        let mut ll = 0.0;
        for i in 0..self.n_obs() {
            let eta = dot(&self.x[i * self.k..(i + 1) * self.k], beta);
            let (a, b) = self.bounds(tau, self.category[i], eta);
            let p = interval(a, b);
            if p <= 0.0 {
                return f64::NEG_INFINITY;
            }
            ll += self.weights[i] * p.ln();
        }
        ll
    }

    /// Analytic gradient of [`Self::log_likelihood`].
    pub fn gradient(&self, theta: &[f64]) -> Vec<f64> {
        let (_, g, _) = self.derivs(theta, false);
        g.iter().map(|v| v * self.total_weight).collect()
    }

    fn bounds(&self, tau: &[f64], c: usize, eta: f64) -> (f64, f64) {
        let upper = if c < tau.len() { tau[c] - eta } else { f64::INFINITY };
        let lower = if c > 0 { tau[c - 1] - eta } else { f64::NEG_INFINITY };
        (upper, lower)
    }

    /// Mean log-likelihood per unit weight with gradient and (optionally) Hessian.
    fn derivs(&self, theta: &[f64], hessian: bool) -> (f64, DVector<f64>, DMatrix<f64>) {
        let k = self.k;
        let np = self.n_params();
        let (beta, tau) = theta.split_at(k);
        let mut value = 0.0;
        let mut g = DVector::zeros(np);
        let mut h = DMatrix::zeros(if hessian { np } else { 0 }, if hessian { np } else { 0 });
        if tau.windows(2).any(|w| w[1] <= w[0]) {
            return (f64::NEG_INFINITY, g, h);
        }
        for i in 0..self.n_obs() {
            let w = self.weights[i] / self.total_weight;
            let xi = &self.x[i * k..(i + 1) * k];
            let eta = dot(xi, beta);
            let c = self.category[i];
            let (a, b) = self.bounds(tau, c, eta);
            let p = interval(a, b);
            if p <= 0.0 {
                return (f64::NEG_INFINITY, g, h);
            }
            value += w * p.ln();
            let (fa, fb) = (pdf(a), pdf(b));
            let (ga, gb) = (fa / p, fb / p);
            let d = (fa - fb) / p;
            let hi_idx = (c < tau.len()).then_some(k + c);
            let lo_idx = (c > 0).then(|| k + c - 1);
            for j in 0..k {
                g[j] -= w * xi[j] * d;
            }
            if let Some(t) = hi_idx {
                g[t] += w * ga;
            }
            if let Some(t) = lo_idx {
                g[t] -= w * gb;
            }
            if !hessian {
                continue;
            }
            let (fpa, fpb) = (pdf_prime(a), pdf_prime(b));
            let h_eta = (fpa - fpb) / p - d * d;
            for r in 0..k {
                for s in 0..k {
                    h[(r, s)] += w * h_eta * xi[r] * xi[s];
                }
            }
            if let Some(t) = hi_idx {
                h[(t, t)] += w * (fpa / p - ga * ga);
                let cross = -fpa / p + ga * d;
                for r in 0..k {
                    h[(t, r)] += w * cross * xi[r];
                    h[(r, t)] += w * cross * xi[r];
                }
            }
            if let Some(t) = lo_idx {
                h[(t, t)] += w * (-fpb / p - gb * gb);
                let cross = fpb / p - gb * d;
                for r in 0..k {
                    h[(t, r)] += w * cross * xi[r];
                    h[(r, t)] += w * cross * xi[r];
                }
            }
            if let (Some(t), Some(u)) = (hi_idx, lo_idx) {
                h[(t, u)] += w * ga * gb;
                h[(u, t)] += w * ga * gb;
            }
        }
        (value, g, h)
    }

    /// Thresholds reproducing the weighted category shares with `beta = 0`.
    pub fn null_thresholds(&self) -> Vec<f64> {
        let m = self.categories.len();
        let mut shares = vec![0.0; m];
        for (c, w) in self.category.iter().zip(&self.weights) {
            shares[*c] += w / self.total_weight;
        }
        let mut cum = 0.0;
        shares[..m - 1]
            .iter()
            .map(|s| {
                cum += s;
                logistic::logit(cum)
            })
            .collect()
    }
}

impl Concave for OrderedLogitLikelihood {
    fn dim(&self) -> usize {
        self.n_params()
    }

    fn value(&self, theta: &DVector<f64>) -> f64 {
        self.log_likelihood(theta.as_slice()) / self.total_weight
    }

    fn derivatives(&self, theta: &DVector<f64>) -> (f64, DVector<f64>, DMatrix<f64>) {
        self.derivs(theta.as_slice(), true)
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Maximum-likelihood ordered logit with logistic link and no constant;
/// thresholds are reported for every adjacent pair of observed categories.
pub fn fit_ordered_logit(ds: &SurveyDataset, covariates: &[String]) -> Result<CanonicalFit> {
    let lik = OrderedLogitLikelihood::new(ds, covariates)?;
    let k = covariates.len();
    let null_tau = lik.null_thresholds();
    let mut theta0 = vec![0.0; k];
    theta0.extend_from_slice(&null_tau);
    let null_ll = lik.log_likelihood(&theta0);

    let out = optim::maximize(&lik, DVector::from_vec(theta0), NewtonOptions::default());
    let theta = out.theta.as_slice();
    if !out.converged {
        check_separation(ds, covariates, &theta[..k])?;
        return Err(Error::NonConvergence { iterations: out.iterations, gradient_norm: out.gradient_norm() });
    }
    check_separation(ds, covariates, &theta[..k])?;

    let n = ds.n_rows() as f64;
    let info = -&out.hessian * n;
    let cov = info.try_inverse().ok_or(Error::RankDeficient)?;
    let se = |j: usize| cov[(j, j)].max(0.0).sqrt();
    let ll = lik.log_likelihood(theta);
    let coefficients = covariates
        .iter()
        .enumerate()
        .map(|(j, name)| Coefficient { name: name.clone(), estimate: theta[j], se: se(j) })
        .collect();
    let cats = lik.categories();
    let thresholds = (0..cats.len() - 1)
        .map(|t| Coefficient {
            name: format!("{}|{}", cats[t], cats[t + 1]),
            estimate: theta[k + t],
            se: se(k + t),
        })
        .collect();
    Ok(CanonicalFit {
        kind: FitKind::OrderedLogit,
        coefficients,
        thresholds,
        categories: cats.to_vec(),
        log_likelihood: Some(ll),
        rss: None,
        r2: None,
        adjusted_r2: None,
        pseudo_r2: Some(1.0 - ll / null_ll),
        n_obs: ds.n_rows(),
        sum_weights: ds.total_weight(),
        iterations: out.iterations,
        dropped: Vec::new(),
    })
}

/// Predicted probabilities over `fit.categories` for covariate row `x`.
pub fn ordered_logit_probs(fit: &CanonicalFit, x: &[f64]) -> Vec<f64> {
    let eta: f64 = fit.coefficients.iter().zip(x).map(|(c, v)| c.estimate * v).sum();
    let tau: Vec<f64> = fit.thresholds.iter().map(|t| t.estimate).collect();
    (0..fit.categories.len())
        .map(|c| {
            let upper = if c < tau.len() { tau[c] - eta } else { f64::INFINITY };
            let lower = if c > 0 { tau[c - 1] - eta } else { f64::NEG_INFINITY };
            interval(upper, lower)
        })
        .collect()
}
