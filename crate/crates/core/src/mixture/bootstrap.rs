use rand::Rng;
use serde::{Deserialize, Serialize};

use super::fit::{fit_mixture, MixtureConfig, MixtureEstimate};
use super::params::MixtureParams;
use crate::data::SurveyDataset;
use crate::error::{Error, Result};
use crate::exec::{self, Execution};
use crate::stats;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BootstrapOptions {
    pub replicates: usize,
    pub keep_fraction: f64,
    /// Hops per replicate; `None` uses the configuration's hop count.
    pub replicate_hops: Option<usize>,
    /// Start every replicate from the full-sample estimate.
    pub warm_start: bool,
    pub seed: u64,
}

impl Default for BootstrapOptions {
    fn default() -> Self {
        Self { replicates: 210, keep_fraction: 2.0 / 3.0, replicate_hops: None, warm_start: true, seed: 0 }
    }
}

impl BootstrapOptions {
    pub fn n_retained(&self) -> usize {
        ((self.keep_fraction * self.replicates as f64) - 1e-9).ceil().max(1.0) as usize
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Replicate {
    pub index: usize,
    pub seed: u64,
    pub params: MixtureParams,
    pub log_likelihood: f64,
    pub mean_log_likelihood: f64,
    pub retained: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NamedEstimate {
    pub name: String,
    pub estimate: f64,
    pub se: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MixtureFit {
    /// Mean of the retained replicates.
    pub point: MixtureParams,
    pub estimates: Vec<NamedEstimate>,
    pub full_sample: MixtureEstimate,
    pub replicates: Vec<Replicate>,
    pub n_obs: usize,
    pub n_retained: usize,
    pub n_failed: usize,
}

impl MixtureFit {
    pub fn estimate(&self, name: &str) -> Option<&NamedEstimate> {
        self.estimates.iter().find(|e| e.name == name)
    }
}

/// Fits the full sample, then `replicates` row-resampled datasets with
/// derived seeds. The replicates with the highest log-likelihood per unit
/// weight are retained; their mean and standard deviation give the point
/// estimate and standard errors.
pub fn bootstrap_fit(ds: &SurveyDataset, config: &MixtureConfig, opts: &BootstrapOptions) -> Result<MixtureFit> {
    if opts.replicates < 2 {
        return Err(Error::InvalidConfig("bootstrap needs at least two replicates".into()));
    }
    if !(opts.keep_fraction > 0.0 && opts.keep_fraction <= 1.0) {
        return Err(Error::InvalidConfig("keep fraction must lie in (0, 1]".into()));
    }
    let full = fit_mixture(ds, config)?;
    let n = ds.n_rows();
    let outer = config.exec;
    let mut rep_config = config.clone();
    rep_config.exec = if outer.is_parallel() { Execution::Sequential } else { outer };
    if let Some(h) = opts.replicate_hops {
        rep_config.hopping.n_hops = h;
    }
    if opts.warm_start {
        rep_config.init = Some(full.params.clone());
    }
    let fits = exec::map_indexed(outer, opts.replicates, |b| {
        let seed = exec::derive_seed(opts.seed, b as u64 + 1);
        let mut rng = exec::stream_rng(seed, 0);
        let rows: Vec<usize> = (0..n).map(|_| rng.random_range(0..n)).collect();
        let sample = ds.select_rows(&rows).ok()?;
        let mut cfg = rep_config.clone();
        cfg.hopping.seed = seed;
        let est = fit_mixture(&sample, &cfg).ok()?;
        Some(Replicate {
            index: b,
            seed,
            params: est.params,
            log_likelihood: est.log_likelihood,
            mean_log_likelihood: est.mean_log_likelihood,
            retained: false,
        })
    });
    let n_failed = fits.iter().filter(|f| f.is_none()).count();
    let mut replicates: Vec<Replicate> = fits.into_iter().flatten().collect();
    if replicates.len() < 2 {
        return Err(Error::AllFailed(opts.replicates));
    }
    let keep = opts.n_retained().min(replicates.len());
    let mut order: Vec<usize> = (0..replicates.len()).collect();
    order.sort_by(|&a, &b| {
        replicates[b].mean_log_likelihood.total_cmp(&replicates[a].mean_log_likelihood).then(a.cmp(&b))
    });
    for &i in &order[..keep] {
        replicates[i].retained = true;
    }
    let retained: Vec<Vec<f64>> = replicates
        .iter()
        .filter(|r| r.retained)
        .map(|r| r.params.named_values().into_iter().map(|(_, v)| v).collect())
        .collect();
    let names: Vec<String> = full.params.named_values().into_iter().map(|(n, _)| n).collect();
    let column = |c: usize| retained.iter().map(|r| r[c]).collect::<Vec<f64>>();
    let estimates: Vec<NamedEstimate> = names
        .iter()
        .enumerate()
        .map(|(c, name)| {
            let col = column(c);
            NamedEstimate { name: name.clone(), estimate: stats::mean(&col), se: stats::sample_sd(&col) }
        })
        .collect();
    let means: Vec<f64> = estimates.iter().map(|e| e.estimate).collect();
    let point = full.params.with_values(&means)?;
    Ok(MixtureFit { point, estimates, full_sample: full, replicates, n_obs: n, n_retained: keep, n_failed })
}
