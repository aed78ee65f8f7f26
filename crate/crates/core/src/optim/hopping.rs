//! Basin hopping: Gaussian perturbation of the incumbent followed by a local
//! quasi-Newton descent, keeping the candidate only when it strictly improves.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use super::bfgs::{self, BfgsOptions, BfgsStatus};

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct HoppingOptions {
    pub n_hops: usize,
    /// Standard deviation of the per-coordinate perturbation.
    pub step: f64,
    pub seed: u64,
    pub local: BfgsOptions,
}

impl Default for HoppingOptions {
    fn default() -> Self {
        Self { n_hops: 50, step: 0.5, seed: 0, local: BfgsOptions::default() }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct HopRecord {
    /// 0 is the descent from the starting point.
    pub hop: usize,
    pub value: f64,
    pub accepted: bool,
    pub status: BfgsStatus,
}

#[derive(Debug, Clone)]
pub struct HoppingOutcome {
    pub x: Vec<f64>,
    pub value: f64,
    pub gradient_norm: f64,
    pub status: BfgsStatus,
    pub accepted: usize,
    pub failures: usize,
    pub trace: Vec<HopRecord>,
}

/// Minimises `f` globally. Returns `None` when every local descent failed
/// to produce a finite objective.
pub fn basin_hopping<F>(mut f: F, x0: &[f64], opts: HoppingOptions) -> Option<HoppingOutcome>
where
    F: FnMut(&[f64]) -> (f64, Vec<f64>),
{
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut best: Option<bfgs::BfgsOutcome> = None;
    let mut trace = Vec::with_capacity(opts.n_hops + 1);
    let mut accepted = 0;
    let mut failures = 0;
    for hop in 0..=opts.n_hops {
        let start: Vec<f64> = match &best {
            None => x0.to_vec(),
            Some(b) => b
                .x
                .iter()
                .map(|v| {
                    let z: f64 = StandardNormal.sample(&mut rng);
                    v + opts.step * z
                })
                .collect(),
        };
        let out = bfgs::minimize(&mut f, &start, opts.local);
        let ok = out.value.is_finite() && out.status != BfgsStatus::NonFinite;
        if !ok {
            failures += 1;
        }
        let better = ok && best.as_ref().is_none_or(|b| out.value < b.value);
        trace.push(HopRecord { hop, value: out.value, accepted: better, status: out.status });
        if better {
            if hop > 0 {
                accepted += 1;
            }
            best = Some(out);
        }
    }
    best.map(|b| HoppingOutcome {
        gradient_norm: b.gradient_norm(),
        x: b.x,
        value: b.value,
        status: b.status,
        accepted,
        failures,
        trace,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    // double well with the global minimum near x = -1.3
    fn wells(x: &[f64]) -> (f64, Vec<f64>) {
        let t = x[0];
        (t.powi(4) - 3.0 * t * t + t, vec![4.0 * t.powi(3) - 6.0 * t + 1.0])
    }

    #[test]
    fn escapes_local_minimum() {
        let local = bfgs::minimize(wells, &[1.5], BfgsOptions::default());
        assert!(local.x[0] > 0.0);
        let opts = HoppingOptions { n_hops: 20, step: 1.5, seed: 3, ..Default::default() };
        let out = basin_hopping(wells, &[1.5], opts).unwrap();
        assert!(out.x[0] < 0.0, "{:?}", out.x);
        assert!(out.accepted >= 1);
        assert_eq!(out.trace.len(), 21);
    }

    #[test]
    fn deterministic_given_seed() {
        let opts = HoppingOptions { n_hops: 10, step: 1.0, seed: 11, ..Default::default() };
        let a = basin_hopping(wells, &[1.5], opts).unwrap();
        let b = basin_hopping(wells, &[1.5], opts).unwrap();
        assert_eq!(a.x[0].to_bits(), b.x[0].to_bits());
    }

    #[test]
    fn all_failures_yield_none() {
        let f = |_: &[f64]| (f64::NAN, vec![0.0]);
        assert!(basin_hopping(f, &[0.0], HoppingOptions { n_hops: 3, ..Default::default() }).is_none());
    }
}
