//! End-to-end behavior on synthetic two-type data.

use std::sync::OnceLock;

use focal_core::canonical::{fit_ols, fit_stepwise_logits, fit_subset_models};
use focal_core::data::{SurveyDataset, EDUCATION, INCOME};
use focal_core::debias::{estimate_focal_bias, reestimate_on_simulated, simulate_counterfactual, BiasOptions, DebiasRules};
use focal_core::dgp::{analytic_category_probs, generate, DgpSpec, GeneratedData};
use focal_core::exec::Execution;
use focal_core::mixture::{fit_mixture, MixtureConfig};
use focal_core::mlogit::{fit_multinomial_logit, marginal_effects_by_response, predict_profiles, EffectsOptions, MultinomialOptions};

fn covs() -> Vec<String> {
    vec![INCOME.to_string(), EDUCATION.to_string()]
}

fn survey() -> &'static GeneratedData {
    static DATA: OnceLock<GeneratedData> = OnceLock::new();
    DATA.get_or_init(|| generate(&DgpSpec::survey_like(60_000, 17), Execution::Parallel).unwrap())
}

fn histogram(ds: &SurveyDataset) -> Vec<f64> {
    let mut h = vec![0.0; 11];
    for &s in ds.responses() {
        h[s as usize] += 1.0;
    }
    h
}

/// Mean analytic profile over the generated covariates.
fn expected_shares(spec: &DgpSpec, ds: &SurveyDataset) -> Vec<f64> {
    let inc = ds.column(INCOME).unwrap();
    let edu = ds.column(EDUCATION).unwrap();
    let mut out = vec![0.0; 11];
    for i in 0..ds.n_rows() {
        let x = [inc[i], edu[i]];
        let p = analytic_category_probs(spec, &x, &x).unwrap();
        for (o, v) in out.iter_mut().zip(&p.probs) {
            *o += v / ds.n_rows() as f64;
        }
    }
    out
}

#[test]
fn stepwise_income_sign_flips_at_the_top() {
    let fits = fit_stepwise_logits(&survey().dataset, &covs(), Execution::Parallel).unwrap();
    let up = fits.pair(8).unwrap().coef(INCOME).unwrap();
    let top = fits.pair(9).unwrap().coef(INCOME).unwrap();
    assert!(up.estimate > 0.0 && up.significant_95(), "{up:?}");
    assert!(top.estimate < 0.0 && top.significant_95(), "{top:?}");
}

#[test]
fn dropping_focal_responses_raises_education_coefficient() {
    let mut spec = DgpSpec::survey_like(60_000, 23);
    spec.params.beta_s[1] = 0.1;
    let ds = generate(&spec, Execution::Parallel).unwrap().dataset;
    let cols = fit_subset_models(&ds, &covs()).unwrap();
    let full = cols.iter().find(|c| c.label == "ols" && c.sample == "all").unwrap();
    let nonfocal = cols.iter().find(|c| c.sample == "non-focal").unwrap();
    let e = |c: &focal_core::canonical::SubsetColumn| c.fit.coef(EDUCATION).unwrap().estimate;
    assert!(e(nonfocal) > e(full), "non-focal {} vs full {}", e(nonfocal), e(full));
}

#[test]
fn high_type_only_histogram_fits_analytic_shares() {
    let mut spec = DgpSpec::survey_like(100_000, 31);
    spec.params.alpha_n = -200.0;
    let g = generate(&spec, Execution::Parallel).unwrap();
    assert!(g.latent.iter().all(|l| l.high_type));
    let obs = histogram(&g.dataset);
    let exp: Vec<f64> = expected_shares(&spec, &g.dataset).iter().map(|p| p * 1e5).collect();
    let chi2: f64 = obs.iter().zip(&exp).map(|(o, e)| (o - e).powi(2) / e).sum();
    // upper 1% point of chi-square with 10 degrees of freedom
    assert!(chi2 < 23.209, "chi-square {chi2}");
}

#[test]
fn empirical_frequencies_track_analytic_profiles() {
    let spec = DgpSpec::survey_like(100_000, 37);
    let g = generate(&spec, Execution::Parallel).unwrap();
    let n = 1e5;
    let obs = histogram(&g.dataset);
    for (c, p) in expected_shares(&spec, &g.dataset).iter().enumerate() {
        let bound = 4.0 * (p * (1.0 - p) / n).sqrt();
        assert!((obs[c] / n - p).abs() < bound, "category {c}: {} vs {p}", obs[c] / n);
    }
    // focal values stand above their neighbours
    assert!(obs[0] > obs[1] && obs[5] > obs[4] && obs[5] > obs[6] && obs[10] > obs[9], "{obs:?}");
}

#[test]
fn mixture_recovers_slopes_on_moderate_sample() {
    let ds = &survey().dataset;
    let mut config = MixtureConfig::new(covs());
    config.hopping.n_hops = 2;
    config.hopping.seed = 3;
    let est = fit_mixture(ds, &config).unwrap();
    let truth = DgpSpec::survey_like(1, 0).params;
    for (got, want) in est.params.beta_s.iter().chain(&est.params.beta_n).zip(truth.beta_s.iter().chain(&truth.beta_n)) {
        assert!((got - want).abs() < 0.1, "{got} vs {want}");
    }
}

#[test]
fn correction_moves_ols_toward_single_type_benchmark() {
    let ds = &survey().dataset;
    let rules = DebiasRules::all(ds.scale());
    let opts = BiasOptions { replication_factor: 5, seed: 4, ..Default::default() };
    let report = estimate_focal_bias(ds, &covs(), &rules, &opts).unwrap();
    assert!(report.modified_share > 0.5);

    let mut spec = DgpSpec::survey_like(60_000, 17);
    spec.params.alpha_n = -200.0;
    let benchmark = fit_ols(&generate(&spec, Execution::Parallel).unwrap().dataset, &covs()).unwrap();
    let target = benchmark.coef(EDUCATION).unwrap().estimate;
    let b = report.covariates.iter().find(|c| c.covariate == EDUCATION).unwrap();
    assert!((b.corrected_coef - target).abs() < (b.naive_coef - target).abs() + 2.0 * b.se, "{b:?} target {target}");
    assert!(b.bias > 0.0, "{b:?}");
}

#[test]
fn simulated_effects_reproduce_and_then_smooth_the_focal_dips() {
    let ds = &survey().dataset;
    let mopts = MultinomialOptions::default();
    let fit = fit_multinomial_logit(ds, &covs(), &mopts).unwrap();
    let profiles = predict_profiles(&fit, ds).unwrap();
    let eopts = EffectsOptions { replicates: 30, seed: 2, ..Default::default() };
    let edu = [EDUCATION.to_string()];
    let original = marginal_effects_by_response(&fit, ds, &edu, &eopts).unwrap();

    let plain = simulate_counterfactual(ds, &profiles, 2, 8, None, Execution::Parallel).unwrap();
    let again = reestimate_on_simulated(&plain, &covs(), &mopts, &eopts).unwrap();
    for (a, b) in original.covariates[0].by_response.iter().zip(&again.covariate(EDUCATION).unwrap().by_response) {
        let overlap = a.effect.ci_lo <= b.effect.ci_hi && b.effect.ci_lo <= a.effect.ci_hi;
        assert!(overlap, "{a:?} vs {b:?}");
    }

    let rules = DebiasRules::all(ds.scale());
    let modified = simulate_counterfactual(ds, &profiles, 2, 8, Some(&rules), Execution::Parallel).unwrap();
    let smoothed = reestimate_on_simulated(&modified, &covs(), &mopts, &eopts).unwrap();
    let m = smoothed.covariate(EDUCATION).unwrap();
    let below_both = |j: i32| {
        let v = m.at(j).unwrap().estimate;
        let lo = if j > 0 { m.at(j - 1) } else { None };
        let hi = m.at(j + 1);
        lo.is_none_or(|l| v < l.estimate) && hi.is_none_or(|h| v < h.estimate)
    };
    assert!(!below_both(5), "{m:?}");
}
