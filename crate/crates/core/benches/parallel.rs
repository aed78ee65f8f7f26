use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use focal_core::data::{EDUCATION, INCOME};
use focal_core::debias::{simulate_counterfactual, DebiasRules};
use focal_core::dgp::{generate, DgpSpec};
use focal_core::exec::Execution;
use focal_core::mixture::MixtureLikelihood;
use focal_core::mlogit::{fit_multinomial_logit, predict_profiles, MultinomialOptions};

const MODES: [Execution; 2] = [Execution::Sequential, Execution::Parallel];

fn covs() -> Vec<String> {
    vec![INCOME.to_string(), EDUCATION.to_string()]
}

fn mixture_likelihood(c: &mut Criterion) {
    let spec = DgpSpec::survey_like(50_000, 1);
    let ds = generate(&spec, Execution::Parallel).unwrap().dataset;
    let mut group = c.benchmark_group("mixture_value_and_gradient");
    for exec in MODES {
        let lik = MixtureLikelihood::for_params(&spec.params, &ds, exec).unwrap();
        let theta = lik.to_free(&spec.params).unwrap();
        group.bench_with_input(BenchmarkId::from_parameter(format!("{exec:?}")), &theta, |b, t| b.iter(|| lik.value_and_gradient(t)));
    }
    group.finish();
}

fn multinomial_fit(c: &mut Criterion) {
    let ds = generate(&DgpSpec::survey_like(20_000, 2), Execution::Parallel).unwrap().dataset;
    let mut group = c.benchmark_group("multinomial_fit");
    group.sample_size(10);
    for exec in MODES {
        let opts = MultinomialOptions { exec, ..Default::default() };
        group.bench_function(format!("{exec:?}"), |b| b.iter(|| fit_multinomial_logit(&ds, &covs(), &opts).unwrap()));
    }
    group.finish();
}

fn counterfactual_simulation(c: &mut Criterion) {
    let ds = generate(&DgpSpec::survey_like(20_000, 3), Execution::Parallel).unwrap().dataset;
    let fit = fit_multinomial_logit(&ds, &covs(), &MultinomialOptions::default()).unwrap();
    let profiles = predict_profiles(&fit, &ds).unwrap();
    let rules = DebiasRules::all(ds.scale());
    let mut group = c.benchmark_group("simulate_counterfactual");
    for exec in MODES {
        group.bench_function(format!("{exec:?}"), |b| b.iter(|| simulate_counterfactual(&ds, &profiles, 10, 7, Some(&rules), exec).unwrap()));
    }
    group.finish();
}

criterion_group!(benches, mixture_likelihood, multinomial_fit, counterfactual_simulation);
criterion_main!(benches);
