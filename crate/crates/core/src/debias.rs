//! Detection and removal of focal-value enhancements in predicted response
//! profiles, counterfactual simulation, and the resulting bias estimates.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::canonical::{fit_ols, CanonicalFit};
use crate::data::{SurveyDataset, INCOME};
use crate::error::{Error, Result};
use crate::exec::{self, Execution};
use crate::mlogit::{
    fit_multinomial_logit, marginal_effects_by_response, predict_profiles, EffectsOptions, MarginalEffectsTable,
    MultinomialFit, MultinomialOptions, ProbabilityProfile,
};
use crate::report::CompensatingDifferential;
use crate::scale::{ContractionMap, ResponseScale};
use crate::stats;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FocalRule {
    /// Lowest focal value, compared with the two values above it.
    Bottom,
    /// Interior focal value, compared with two values on each side.
    Middle,
    /// Highest focal value, compared with the two values below it.
    Top,
}

impl FocalRule {
    pub const ALL: [FocalRule; 3] = [FocalRule::Bottom, FocalRule::Middle, FocalRule::Top];
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DebiasRules {
    pub active: Vec<FocalRule>,
    pub contraction: ContractionMap,
    pub focal: [i32; 3],
}

impl DebiasRules {
    pub fn new(scale: &ResponseScale, active: Vec<FocalRule>, contraction: ContractionMap) -> Result<Self> {
        if active.is_empty() {
            return Err(Error::InvalidConfig("at least one de-bias rule must be active".into()));
        }
        Ok(Self { active, contraction, focal: scale.focal_values() })
    }

    /// Every rule with the scale's default contraction groups.
    pub fn all(scale: &ResponseScale) -> Self {
        Self { active: FocalRule::ALL.to_vec(), contraction: scale.default_contraction(), focal: scale.focal_values() }
    }

    pub fn only(scale: &ResponseScale, rules: &[FocalRule]) -> Result<Self> {
        Self::new(scale, rules.to_vec(), scale.default_contraction())
    }

    fn is_active(&self, rule: FocalRule) -> bool {
        self.active.contains(&rule)
    }
}

/// Removes focal enhancements from `p`. Each active rule is tested on the
/// original profile; a triggered rule lowers its focal entry and rescales
/// that focal value's contraction group back to its original total.
pub fn modify_profile(p: &ProbabilityProfile, rules: &DebiasRules) -> ProbabilityProfile {
    let at = |s: i32| p.get(s);
    let [lo, mid, hi] = rules.focal;
    let mut targets: Vec<(i32, f64)> = Vec::new();
    if rules.is_active(FocalRule::Bottom) && at(lo) > at(lo + 1) && at(lo + 2) > at(lo + 1) {
        targets.push((lo, at(lo + 1)));
    }
    if rules.is_active(FocalRule::Top) && at(hi) > at(hi - 1) && at(hi - 2) > at(hi - 1) {
        targets.push((hi, at(hi - 1)));
    }
    if rules.is_active(FocalRule::Middle)
        && at(mid) > at(mid + 1)
        && at(mid) > at(mid - 1)
        && (at(mid + 2) > at(mid + 1) || at(mid - 2) > at(mid - 1))
    {
        targets.push((mid, 0.5 * (at(mid - 1) + at(mid + 1))));
    }

    let mut out = p.clone();
    for (focal, value) in targets {
        let Some(group) = rules.contraction.group_for_target(focal) else { continue };
        let idx = |s: i32| (s - p.min_value) as usize;
        let before: f64 = group.members.iter().map(|&s| at(s)).sum();
        out.probs[idx(focal)] = value;
        let after: f64 = group.members.iter().map(|&s| out.probs[idx(s)]).sum();
        if after > 0.0 {
            let k = before / after;
            for &s in &group.members {
                out.probs[idx(s)] *= k;
            }
        }
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SimulationSource {
    Unmodified,
    Modified,
}

#[derive(Debug, Clone)]
pub struct SimulatedDataset {
    pub dataset: SurveyDataset,
    pub replication_factor: usize,
    pub source: SimulationSource,
}

/// Draws `replication_factor` responses per row from each row's profile
/// (optionally modified). Copies of row `i` occupy positions
/// `i * R .. (i + 1) * R`; simulated row `r` uses RNG stream `r`.
pub fn simulate_counterfactual(
    ds: &SurveyDataset,
    profiles: &[ProbabilityProfile],
    replication_factor: usize,
    seed: u64,
    modify: Option<&DebiasRules>,
    exec: Execution,
) -> Result<SimulatedDataset> {
    if profiles.len() != ds.n_rows() {
        return Err(Error::InvalidData(format!("{} profiles for {} rows", profiles.len(), ds.n_rows())));
    }
    if replication_factor == 0 {
        return Err(Error::InvalidConfig("replication factor must be at least 1".into()));
    }
    let scale = ds.scale();
    for p in profiles {
        if !p.is_valid(1e-8) || p.min_value != scale.min_value() || p.probs.len() != scale.n_categories() {
            return Err(Error::InvalidData("invalid probability profile".into()));
        }
    }
    let used: Vec<ProbabilityProfile> = match modify {
        Some(rules) => profiles.iter().map(|p| modify_profile(p, rules)).collect(),
        None => profiles.to_vec(),
    };
    let r = replication_factor;
    let total = ds.n_rows() * r;
    let chunks = exec::map_chunks(exec, total, |range| {
        range
            .map(|row| {
                let p = &used[row / r];
                let u: f64 = exec::stream_rng(seed, row as u64).random();
                draw(p, u)
            })
            .collect::<Vec<i32>>()
    });
    let responses: Vec<i32> = chunks.into_iter().flatten().collect();
    let source_rows: Vec<usize> = (0..total).map(|row| row / r).collect();
    let mut dataset = ds.select_rows(&source_rows)?;
    dataset = dataset.with_responses(responses);
    Ok(SimulatedDataset {
        dataset,
        replication_factor,
        source: if modify.is_some() { SimulationSource::Modified } else { SimulationSource::Unmodified },
    })
}

/// Inverse-CDF draw; the last positive category absorbs rounding slack.
fn draw(p: &ProbabilityProfile, u: f64) -> i32 {
    let mut cum = 0.0;
    let mut last = 0;
    for (i, &q) in p.probs.iter().enumerate() {
        if q <= 0.0 {
            continue;
        }
        cum += q;
        last = i;
        if u < cum {
            break;
        }
    }
    p.min_value + last as i32
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CovariateBias {
    pub covariate: String,
    /// OLS on the observed responses.
    pub observed_coef: f64,
    /// OLS on responses simulated from the fitted profiles.
    pub naive_coef: f64,
    /// OLS on responses simulated from the modified profiles.
    pub corrected_coef: f64,
    pub bias: f64,
    pub se: f64,
    pub compensating_differential_pct: Option<CompensatingDifferential>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BiasReport {
    pub replication_factor: usize,
    pub seed: u64,
    /// Share of rows whose profile was changed by at least one rule.
    pub modified_share: f64,
    pub covariates: Vec<CovariateBias>,
    pub multinomial: MultinomialFit,
    pub observed_ols: CanonicalFit,
    pub naive_ols: CanonicalFit,
    pub corrected_ols: CanonicalFit,
}

/// OLS standard errors on data replicated `r` times, rescaled to the
/// precision of the original sample size.
fn replicated_se(se: f64, r: usize) -> f64 {
    se * (r as f64).sqrt()
}

#[derive(Debug, Clone)]
pub struct BiasOptions {
    pub replication_factor: usize,
    pub seed: u64,
    pub exec: Execution,
    pub multinomial: MultinomialOptions,
}

impl Default for BiasOptions {
    fn default() -> Self {
        Self { replication_factor: 10, seed: 0, exec: Execution::Parallel, multinomial: MultinomialOptions::default() }
    }
}

/// Multinomial fit, profile prediction, unmodified and modified simulation
/// with common random numbers, and OLS on each simulated dataset.
pub fn estimate_focal_bias(
    ds: &SurveyDataset,
    covariates: &[String],
    rules: &DebiasRules,
    opts: &BiasOptions,
) -> Result<BiasReport> {
    let fit = fit_multinomial_logit(ds, covariates, &opts.multinomial)?;
    let profiles = predict_profiles(&fit, ds)?;
    let modified_share = profiles.iter().filter(|p| modify_profile(p, rules) != **p).count() as f64 / profiles.len() as f64;
    let r = opts.replication_factor;
    let naive = simulate_counterfactual(ds, &profiles, r, opts.seed, None, opts.exec)?;
    let corrected = simulate_counterfactual(ds, &profiles, r, opts.seed, Some(rules), opts.exec)?;
    let observed_ols = fit_ols(ds, covariates)?;
    let naive_ols = fit_ols(&naive.dataset, covariates)?;
    let corrected_ols = fit_ols(&corrected.dataset, covariates)?;
    let income = naive_ols.coef(INCOME).map(|c| c.estimate);
    let covariates = covariates
        .iter()
        .map(|name| {
            let a = naive_ols.coef(name).expect("fitted covariate");
            let b = corrected_ols.coef(name).expect("fitted covariate");
            let bias = b.estimate - a.estimate;
            let se = replicated_se(a.se, r).hypot(replicated_se(b.se, r));
            CovariateBias {
                covariate: name.clone(),
                observed_coef: observed_ols.coef(name).expect("fitted covariate").estimate,
                naive_coef: a.estimate,
                corrected_coef: b.estimate,
                bias,
                se,
                compensating_differential_pct: income.and_then(|inc| CompensatingDifferential::new(bias, inc).ok()),
            }
        })
        .collect();
    Ok(BiasReport {
        replication_factor: r,
        seed: opts.seed,
        modified_share,
        covariates,
        multinomial: fit,
        observed_ols,
        naive_ols,
        corrected_ols,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupMeans {
    /// Group level, or `None` for the whole sample.
    pub level: Option<f64>,
    pub n_obs: usize,
    pub sample_mean: f64,
    pub fitted_mean: f64,
    pub corrected_mean: f64,
    /// `corrected_mean - fitted_mean`.
    pub correction: f64,
    /// Bootstrap standard error of `correction`; NaN without replicates.
    pub correction_se: f64,
}

#[derive(Debug, Clone, Copy)]
pub struct GroupMeansOptions {
    /// Row-bootstrap replicates for the correction's standard error.
    pub replicates: usize,
    pub seed: u64,
    pub exec: Execution,
}

impl Default for GroupMeansOptions {
    fn default() -> Self {
        Self { replicates: 0, seed: 0, exec: Execution::Parallel }
    }
}

fn distinct_levels(col: &[f64]) -> Vec<f64> {
    let mut levels: Vec<f64> = col.to_vec();
    levels.sort_by(f64::total_cmp);
    levels.dedup();
    levels
}

/// Per-group `(sample, fitted, corrected)` weighted means, overall row first.
fn group_means_once(
    ds: &SurveyDataset,
    fit: &MultinomialFit,
    grouping: &str,
    levels: &[f64],
    rules: &DebiasRules,
) -> Result<Vec<(usize, f64, f64, f64)>> {
    let profiles = predict_profiles(fit, ds)?;
    let col = ds.column(grouping)?;
    let groups = std::iter::once(None).chain(levels.iter().copied().map(Some));
    groups
        .map(|level| {
            let (mut n, mut sw, mut s, mut f, mut c) = (0usize, 0.0, 0.0, 0.0, 0.0);
            for i in 0..ds.n_rows() {
                if level.is_some_and(|l| col[i] != l) {
                    continue;
                }
                let w = ds.weights()[i];
                n += 1;
                sw += w;
                s += w * f64::from(ds.responses()[i]);
                f += w * profiles[i].expected_value();
                c += w * modify_profile(&profiles[i], rules).expected_value();
            }
            if n == 0 || sw <= 0.0 {
                return Err(Error::EmptyGroup(level.map_or("all".into(), |l| l.to_string())));
            }
            Ok((n, s / sw, f / sw, c / sw))
        })
        .collect()
}

/// Mean observed, fitted, and focal-corrected expected response by level of
/// `grouping` and overall. A grouping with one level yields the overall row only.
pub fn mean_eswl_by_group(
    ds: &SurveyDataset,
    covariates: &[String],
    grouping: &str,
    rules: &DebiasRules,
    mopts: &MultinomialOptions,
    opts: &GroupMeansOptions,
) -> Result<Vec<GroupMeans>> {
    let fit = fit_multinomial_logit(ds, covariates, mopts)?;
    let mut levels = distinct_levels(ds.column(grouping)?);
    if levels.len() < 2 {
        levels.clear();
    }
    let point = group_means_once(ds, &fit, grouping, &levels, rules)?;

    let n = ds.n_rows();
    let boot_opts = MultinomialOptions {
        categories: Some(fit.categories.clone()),
        base: Some(fit.base_category),
        exec: Execution::Sequential,
        init: Some(fit.theta()),
        newton: mopts.newton,
    };
    let reps: Vec<Vec<f64>> = exec::map_indexed(opts.exec, opts.replicates, |b| {
        let mut rng = exec::stream_rng(exec::derive_seed(opts.seed, b as u64), 0);
        let rows: Vec<usize> = (0..n).map(|_| rng.random_range(0..n)).collect();
        let sample = ds.select_rows(&rows).ok()?;
        let refit = fit_multinomial_logit(&sample, covariates, &boot_opts).ok()?;
        let m = group_means_once(&sample, &refit, grouping, &levels, rules).ok()?;
        Some(m.iter().map(|g| g.3 - g.2).collect())
    })
    .into_iter()
    .flatten()
    .collect();

    Ok(point
        .iter()
        .enumerate()
        .map(|(g, &(n_obs, sample_mean, fitted_mean, corrected_mean))| {
            let draws: Vec<f64> = reps.iter().map(|r| r[g]).collect();
            GroupMeans {
                level: if g == 0 { None } else { Some(levels[g - 1]) },
                n_obs,
                sample_mean,
                fitted_mean,
                corrected_mean,
                correction: corrected_mean - fitted_mean,
                correction_se: stats::sample_sd(&draws),
            }
        })
        .collect())
}

/// Multinomial fit and per-response marginal effects on simulated data.
pub fn reestimate_on_simulated(
    simulated: &SimulatedDataset,
    covariates: &[String],
    mopts: &MultinomialOptions,
    eopts: &EffectsOptions,
) -> Result<MarginalEffectsTable> {
    let fit = fit_multinomial_logit(&simulated.dataset, covariates, mopts)?;
    marginal_effects_by_response(&fit, &simulated.dataset, covariates, eopts)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn profile(probs: Vec<f64>) -> ProbabilityProfile {
        ProbabilityProfile::new(0, probs)
    }

    fn rules() -> DebiasRules {
        DebiasRules::all(&ResponseScale::zero_to_ten())
    }

    #[test]
    fn uniform_profile_is_unchanged() {
        let p = profile(vec![1.0 / 11.0; 11]);
        assert_eq!(modify_profile(&p, &rules()), p);
    }

    #[test]
    fn bottom_rule_example() {
        let mut probs = vec![0.10, 0.04, 0.06];
        probs.extend([0.1; 8]);
        let out = modify_profile(&profile(probs), &rules());
        let expect = [0.04 / 0.14 * 0.2, 0.04 / 0.14 * 0.2, 0.06 / 0.14 * 0.2];
        for (a, b) in out.probs[..3].iter().zip(expect) {
            assert!((a - b).abs() < 1e-15);
        }
        assert!((out.probs[0] - 0.05714).abs() < 1e-5 && (out.probs[2] - 0.08571).abs() < 1e-5);
        assert!((out.probs[..3].iter().sum::<f64>() - 0.2).abs() < 1e-15);
    }

    #[test]
    fn top_rule_needs_dip_at_nine() {
        let probs: Vec<f64> = (1..=11).map(f64::from).collect();
        let total: f64 = probs.iter().sum();
        let p = profile(probs.iter().map(|v| v / total).collect());
        let out = modify_profile(&p, &rules());
        assert_eq!(&out.probs[8..], &p.probs[8..]);
    }

    #[test]
    fn middle_rule_targets_neighbour_mean() {
        let mut probs = vec![0.05; 11];
        probs[3] = 0.08;
        probs[4] = 0.04;
        probs[5] = 0.2;
        probs[6] = 0.06;
        probs[7] = 0.07;
        let s: f64 = probs.iter().sum();
        let p = profile(probs.iter().map(|v| v / s).collect());
        let out = modify_profile(&p, &rules());
        let group: f64 = p.probs[3..8].iter().sum();
        let reduced = 0.5 * (p.probs[4] + p.probs[6]);
        let k = group / (group - p.probs[5] + reduced);
        assert!((out.probs[5] - reduced * k).abs() < 1e-15);
        assert!((out.probs[3] - p.probs[3] * k).abs() < 1e-15);
    }

    #[test]
    fn degenerate_profile_always_draws_its_value() {
        let ds = SurveyDataset::new(vec![3; 4], vec![], vec![], None, ResponseScale::zero_to_ten()).unwrap();
        let mut probs = vec![0.0; 11];
        probs[8] = 1.0;
        let profiles = vec![profile(probs); 4];
        let sim = simulate_counterfactual(&ds, &profiles, 10, 1, None, Execution::Parallel).unwrap();
        assert_eq!(sim.dataset.n_rows(), 40);
        assert!(sim.dataset.responses().iter().all(|&s| s == 8));
    }

    #[test]
    fn simulation_matches_profile_frequencies() {
        let n = 1000;
        let ds = SurveyDataset::new(vec![0; n], vec![], vec![], None, ResponseScale::zero_to_ten()).unwrap();
        let probs: Vec<f64> = [1., 1., 2., 3., 5., 8., 13., 21., 20., 15., 11.].iter().map(|v| v / 100.0).collect();
        let profiles = vec![profile(probs.clone()); n];
        let sim = simulate_counterfactual(&ds, &profiles, 100, 9, None, Execution::Parallel).unwrap();
        let total = sim.dataset.n_rows() as f64;
        for (j, &p) in probs.iter().enumerate() {
            let freq = sim.dataset.responses().iter().filter(|&&s| s == j as i32).count() as f64 / total;
            assert!((freq - p).abs() < 3.0 * (p * (1.0 - p) / total).sqrt(), "{j}: {freq} vs {p}");
        }
        let seq = simulate_counterfactual(&ds, &profiles, 100, 9, None, Execution::Sequential).unwrap();
        assert_eq!(seq.dataset.responses(), sim.dataset.responses());
    }

    fn arb_profile() -> impl Strategy<Value = ProbabilityProfile> {
        prop::collection::vec(0.0f64..1.0, 11).prop_filter_map("positive mass", |v| {
            let s: f64 = v.iter().sum();
            (s > 1e-6).then(|| profile(v.iter().map(|x| x / s).collect()))
        })
    }

    proptest! {
        #[test]
        fn preserves_mass_and_nonnegativity(p in arb_profile()) {
            let out = modify_profile(&p, &rules());
            prop_assert!(out.probs.iter().all(|&q| q >= 0.0));
            prop_assert!((out.sum() - p.sum()).abs() < 1e-12);
            for g in rules().contraction.groups() {
                let a: f64 = g.members.iter().map(|&s| p.get(s)).sum();
                let b: f64 = g.members.iter().map(|&s| out.get(s)).sum();
                prop_assert!((a - b).abs() < 1e-12);
            }
        }

        #[test]
        fn endpoint_rules_are_idempotent(p in arb_profile()) {
            let scale = ResponseScale::zero_to_ten();
            let r = DebiasRules::only(&scale, &[FocalRule::Bottom, FocalRule::Top]).unwrap();
            let once = modify_profile(&p, &r);
            let twice = modify_profile(&once, &r);
            for (a, b) in once.probs.iter().zip(&twice.probs) {
                prop_assert!((a - b).abs() < 1e-12);
            }
        }

        #[test]
        fn rule_order_is_irrelevant(p in arb_profile()) {
            let scale = ResponseScale::zero_to_ten();
            let fwd = DebiasRules::only(&scale, &FocalRule::ALL).unwrap();
            let rev = DebiasRules::only(&scale, &[FocalRule::Top, FocalRule::Middle, FocalRule::Bottom]).unwrap();
            prop_assert_eq!(modify_profile(&p, &fwd), modify_profile(&p, &rev));
        }
    }
}
