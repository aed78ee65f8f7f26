//! Acceptance suite: one PASS/FAIL line per criterion, non-zero exit if any fails.

#[path = "../../core/tests/support/mod.rs"]
mod support;

use std::path::Path;
use std::process::Command;
use std::time::Instant;

use focal_core::canonical::{fit_ols, fit_ordered_logit, fit_stepwise_logits, OrderedLogitLikelihood};
use focal_core::data::{SurveyDataset, EDUCATION, INCOME};
use focal_core::debias::{modify_profile, DebiasRules};
use focal_core::dgp::{analytic_category_probs, generate, DgpSpec};
use focal_core::exec::{stream_rng, Execution};
use focal_core::mixture::{mixture_response_prob, predict_numeracy, CutoffMode, MixtureLikelihood, MixtureParams};
use focal_core::mlogit::{
    average_marginal_effects, fit_multinomial_logit, marginal_effects_by_response, predict_profiles, EffectsOptions, MultinomialFit,
    MultinomialLikelihood, MultinomialOptions, ProbabilityProfile,
};
use focal_core::scale::ResponseScale;
use rand::Rng;
use serde_json::Value;

// criterion 1
const RECOVERY_N: usize = 100_000;
const RECOVERY_ABS_TOL: f64 = 0.05;
const RECOVERY_SE_MULT: f64 = 3.0;
const RECOVERY_BOOTSTRAP: &str = "30";
// criterion 2
const NAIVE_GAP: f64 = 0.05;
// criterion 3
const FOCAL_N: usize = 200_000;
const FOCAL_REPLICATES: usize = 100;
// criterion 4
const CONTRACTED_SHARE: f64 = 0.3;
const TV_REDUCTION: f64 = 0.5;
const TV_PASS_SHARE: f64 = 0.95;
// criterion 5
const GRID_TOL: f64 = 2e-3;
const OLS_TOL: f64 = 1e-8;
// criterion 6
const FD_STEP: f64 = 1e-6;
const FD_TOL: f64 = 1e-5;
// criterion 7
const DRAWS: usize = 1000;
const SUM_TOL: f64 = 1e-10;
const AME_SUM_TOL: f64 = 1e-8;
// criterion 10
const NUMERACY_EDU: f64 = 0.22;

const DGP_SEED: u64 = 11;

type Outcome = (bool, String);

fn focal(dir: &Path, args: &[&str], threads: &str) -> Result<(), String> {
    let out = Command::new(env!("CARGO_BIN_EXE_focal"))
        .current_dir(dir)
        .args(args)
        .env("FOCAL_THREADS", threads)
        .output()
        .map_err(|e| e.to_string())?;
    if out.status.success() {
        Ok(())
    } else {
        Err(format!("{args:?} exited {:?}: {}", out.status.code(), String::from_utf8_lossy(&out.stderr)))
    }
}

fn summary(path: &Path) -> Vec<(String, f64, Option<f64>)> {
    let doc: Value = serde_json::from_slice(&std::fs::read(path).unwrap()).unwrap();
    doc["summary"]
        .as_array()
        .unwrap()
        .iter()
        .map(|r| (r["name"].as_str().unwrap().to_string(), r["estimate"].as_f64().unwrap(), r["se"].as_f64()))
        .collect()
}

fn lookup(rows: &[(String, f64, Option<f64>)], name: &str) -> (f64, Option<f64>) {
    rows.iter().find(|r| r.0 == name).map(|r| (r.1, r.2)).unwrap_or((f64::NAN, None))
}

fn covs() -> Vec<String> {
    vec![INCOME.to_string(), EDUCATION.to_string()]
}

fn recovery_and_naive_bias(dir: &Path) -> Result<(Outcome, Outcome), String> {
    let n = RECOVERY_N.to_string();
    let seed = DGP_SEED.to_string();
    focal(dir, &["dgp", "--n", &n, "--seed", &seed, "--out", "recovery.csv"], "4")?;
    let start = Instant::now();
    focal(
        dir,
        &["fit", "--model", "mixture", "--mode", "free", "--data", "recovery.csv", "--bootstrap", RECOVERY_BOOTSTRAP, "--hops", "5", "--replicate-hops", "1", "--seed", "1", "--out", "mixture.json"],
        "4",
    )?;
    let secs = start.elapsed().as_secs_f64();
    focal(dir, &["fit", "--model", "ologit", "--data", "recovery.csv", "--out", "ologit.json"], "4")?;
    let mix = summary(&dir.join("mixture.json"));
    let truth = DgpSpec::survey_like(1, 0).params;
    let mut ok = true;
    let mut detail = Vec::new();
    let targets = [
        (INCOME.to_string(), truth.beta_s[0]),
        (EDUCATION.to_string(), truth.beta_s[1]),
        (format!("numeracy:{INCOME}"), truth.beta_n[0]),
        (format!("numeracy:{EDUCATION}"), truth.beta_n[1]),
    ];
    for (name, want) in &targets {
        let (est, se) = lookup(&mix, name);
        let se = se.unwrap_or(f64::NAN);
        let good = (est - want).abs() <= RECOVERY_ABS_TOL && (est - want).abs() <= RECOVERY_SE_MULT * se;
        ok &= good;
        detail.push(format!("{name} {est:.4} (se {se:.4}, true {want})"));
    }
    let recovery = (ok, format!("{}; {secs:.0}s", detail.join(", ")));

    let (mixture_income, _) = lookup(&mix, INCOME);
    let (ologit_income, _) = lookup(&summary(&dir.join("ologit.json")), INCOME);
    let gap = mixture_income - ologit_income;
    let naive = (gap >= NAIVE_GAP, format!("ordered logit income {ologit_income:.4} vs mixture {mixture_income:.4}, gap {gap:.4}"));
    Ok((recovery, naive))
}

fn focal_pattern() -> Outcome {
    let ds = generate(&DgpSpec::survey_like(FOCAL_N, DGP_SEED), Execution::Parallel).unwrap().dataset;
    let fit = fit_multinomial_logit(&ds, &covs(), &MultinomialOptions::default()).unwrap();
    let opts = EffectsOptions { replicates: FOCAL_REPLICATES, seed: 1, ..Default::default() };
    let table = marginal_effects_by_response(&fit, &ds, &[EDUCATION.to_string()], &opts).unwrap();
    let c = &table.covariates[0];
    let mut ok = true;
    let mut detail = Vec::new();
    for j in ds.scale().focal_values() {
        let e = c.at(j).unwrap();
        let nb: Vec<f64> = [j - 1, j + 1].iter().filter_map(|k| c.at(*k)).map(|x| x.estimate).collect();
        let mean = nb.iter().sum::<f64>() / nb.len() as f64;
        let good = e.estimate < mean && e.excludes(mean);
        ok &= good;
        detail.push(format!("{j}: {:.5} [{:.5}, {:.5}] vs {mean:.5}", e.estimate, e.ci_lo, e.ci_hi));
    }
    (ok, format!("N={FOCAL_N}, {} replicates; {}", table.replicates_used, detail.join("; ")))
}

fn debias_pipeline() -> Outcome {
    let rules = DebiasRules::all(&ResponseScale::zero_to_ten());
    let mut rng = stream_rng(4, 0);
    let mut passed = 0;
    for _ in 0..DRAWS {
        let b = support::smooth_baseline(rng.random_range(6.5..8.5), rng.random_range(1.5..3.5));
        let observed = support::mix_with_contraction(&b, CONTRACTED_SHARE);
        let fixed = modify_profile(&ProbabilityProfile::new(0, observed.clone()), &rules);
        let before = support::total_variation(&observed, &b);
        let after = support::total_variation(&fixed.probs, &b);
        if after <= (1.0 - TV_REDUCTION) * before {
            passed += 1;
        }
    }
    let share = passed as f64 / DRAWS as f64;
    (share >= TV_PASS_SHARE, format!("{passed}/{DRAWS} profiles with total-variation reduction >= {:.0}%", 100.0 * TV_REDUCTION))
}

fn oracles() -> Outcome {
    let ds = support::small_three_category(30, 5);
    let x = ds.column("x").unwrap().to_vec();
    let fit = fit_ordered_logit(&ds, &["x".to_string()]).unwrap();
    let grid = support::grid_maximize(|t| support::ologit_reference(t, &x, ds.responses()), &[0.0, -1.0, 1.0], 3.0, 11, 28);
    let got = [fit.coefficients[0].estimate, fit.thresholds[0].estimate, fit.thresholds[1].estimate];
    let ologit_err = got.iter().zip(&grid).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);

    let ds = support::small_three_category(40, 8);
    let x = ds.column("x").unwrap().to_vec();
    let opts = MultinomialOptions { categories: Some(vec![0, 1, 2]), ..Default::default() };
    let fit = fit_multinomial_logit(&ds, &["x".to_string()], &opts).unwrap();
    let grid = support::grid_maximize(|t| support::mlogit_reference(t, &x, ds.responses()), &[0.0; 4], 3.0, 11, 28);
    let mlogit_err = fit.theta().iter().zip(&grid).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);

    let mut rng = stream_rng(21, 0);
    let a: Vec<f64> = (0..50).map(|_| rng.random_range(9.0..12.0)).collect();
    let e: Vec<f64> = (0..50).map(|_| f64::from(rng.random_range(1..=4))).collect();
    let y: Vec<i32> = (0..50).map(|_| rng.random_range(0..=10)).collect();
    let ds = SurveyDataset::new(y.clone(), vec!["a".into(), "e".into()], vec![a.clone(), e.clone()], None, ResponseScale::zero_to_ten()).unwrap();
    let ols = fit_ols(&ds, &["a".to_string(), "e".to_string()]).unwrap();
    let rows: Vec<Vec<f64>> = (0..50).map(|i| vec![1.0, a[i], e[i]]).collect();
    let yf: Vec<f64> = y.iter().map(|&v| f64::from(v)).collect();
    let ne = support::normal_equations(&rows, &yf);
    let ols_err = ols.coefficients.iter().zip(&ne).map(|(c, o)| (c.estimate - o).abs()).fold(0.0, f64::max);

    let ok = ologit_err < GRID_TOL && mlogit_err < GRID_TOL && ols_err < OLS_TOL;
    (ok, format!("max |diff|: ordered logit {ologit_err:.2e}, multinomial {mlogit_err:.2e}, OLS {ols_err:.2e}"))
}

fn gradients() -> Outcome {
    let mut rng = stream_rng(6, 0);
    let mut worst = [0.0f64; 3];

    let g = generate(&DgpSpec::survey_like(500, 6), Execution::Parallel).unwrap();
    let truth = DgpSpec::survey_like(1, 0).params;
    let lik = MixtureLikelihood::for_params(&truth, &g.dataset, Execution::Parallel).unwrap();
    let center = lik.to_free(&truth).unwrap();
    for _ in 0..5 {
        let t: Vec<f64> = center.iter().map(|c| c + rng.random_range(-0.3..0.3)).collect();
        worst[0] = worst[0].max(support::max_fd_error(|p| lik.value(p), &lik.value_and_gradient(&t).1, &t, FD_STEP));
    }

    let ds = support::small_three_category(300, 2);
    let ol = OrderedLogitLikelihood::new(&ds, &["x".to_string()]).unwrap();
    for _ in 0..5 {
        let t0: f64 = rng.random_range(-1.5..0.0);
        let t = vec![rng.random_range(-1.0..1.0), t0, t0 + rng.random_range(0.3..2.0)];
        worst[1] = worst[1].max(support::max_fd_error(|p| ol.log_likelihood(p), &ol.gradient(&t), &t, FD_STEP));
    }

    let ml = MultinomialLikelihood::new(&ds, &["x".to_string()], &[0, 1, 2], 0, Execution::Parallel).unwrap();
    for _ in 0..5 {
        let t: Vec<f64> = (0..4).map(|_| rng.random_range(-1.5..1.5)).collect();
        worst[2] = worst[2].max(support::max_fd_error(|p| ml.log_likelihood(p), &ml.gradient(&t), &t, FD_STEP));
    }
    (worst.iter().all(|w| *w < FD_TOL), format!("max relative error: mixture {:.1e}, ordered logit {:.1e}, multinomial {:.1e}", worst[0], worst[1], worst[2]))
}

fn normalization() -> Outcome {
    let mut rng = stream_rng(7, 0);
    let names = vec!["a".to_string(), "b".to_string()];
    let (mut ml, mut mix, mut dgp, mut ame) = (0.0f64, 0.0f64, 0.0f64, 0.0f64);
    for _ in 0..DRAWS {
        let theta: Vec<f64> = (0..30).map(|_| rng.random_range(-3.0..3.0)).collect();
        let fit = MultinomialFit::with_theta((0..=10).collect(), 0, names.clone(), &theta).unwrap();
        let x = [rng.random_range(-2.0..2.0), rng.random_range(-2.0..2.0)];
        let ds = SurveyDataset::new(vec![0], names.clone(), vec![vec![x[0]], vec![x[1]]], None, ResponseScale::zero_to_ten()).unwrap();
        ml = ml.max((predict_profiles(&fit, &ds).unwrap()[0].sum() - 1.0).abs());
        for c in &names {
            ame = ame.max(average_marginal_effects(&fit, &ds, c).unwrap().iter().sum::<f64>().abs());
        }

        let mut tau = vec![rng.random_range(-4.0..2.0)];
        for _ in 0..9 {
            tau.push(tau.last().unwrap() + rng.random_range(0.05..2.0));
        }
        let lo = rng.random_range(-2.0..4.0);
        let mode = if rng.random_bool(0.5) { CutoffMode::Free } else { CutoffMode::Tied };
        let bn = vec![rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)];
        let bs = vec![rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)];
        let p = MixtureParams::from_thresholds(ResponseScale::zero_to_ten(), mode, rng.random_range(-3.0..3.0), (names.clone(), bn), (names.clone(), bs), &tau, (lo, lo + rng.random_range(0.1..5.0))).unwrap();
        let total: f64 = (0..=10).map(|s| mixture_response_prob(&p, &x, &x, s).unwrap()).sum();
        mix = mix.max((total - 1.0).abs());

        let mut spec = DgpSpec::survey_like(1, 0);
        spec.params.alpha_n = rng.random_range(-2.0..5.0);
        let z = [rng.random_range(8.0..13.0), f64::from(rng.random_range(1..=4))];
        dgp = dgp.max((analytic_category_probs(&spec, &z, &z).unwrap().sum() - 1.0).abs());
    }
    let ok = ml < SUM_TOL && mix < SUM_TOL && dgp < SUM_TOL && ame < AME_SUM_TOL;
    (ok, format!("{DRAWS} draws; max |sum-1|: multinomial {ml:.1e}, mixture {mix:.1e}, analytic {dgp:.1e}; max |sum AME| {ame:.1e}"))
}

fn determinism(dir: &Path) -> Result<Outcome, String> {
    focal(dir, &["dgp", "--n", "3000", "--seed", "2", "--out", "det.csv"], "1")?;
    let runs: [(&str, &[&str]); 7] = [
        ("dgp", &["dgp", "--n", "3000", "--seed", "2", "--latent", "LAT", "--out"]),
        ("mixture", &["fit", "--model", "mixture", "--data", "det.csv", "--hops", "2", "--bootstrap", "4", "--replicate-hops", "1", "--seed", "3", "--out"]),
        ("mlogit", &["fit", "--model", "mlogit", "--data", "det.csv", "--effect-replicates", "8", "--seed", "3", "--out"]),
        ("debias", &["debias", "--data", "det.csv", "--replication", "3", "--group", "education4", "--group-replicates", "3", "--seed", "3", "--out"]),
        ("simulate", &["simulate", "--data", "det.csv", "--modified", "--effect-replicates", "3", "--seed", "3", "--data-out", "SIM", "--out"]),
        ("stepwise", &["stepwise", "--data", "det.csv", "--out"]),
        ("subsets", &["subsets", "--data", "det.csv", "--out"]),
    ];
    let mut ok = true;
    let mut bad = Vec::new();
    for (label, args) in runs {
        let mut outputs = Vec::new();
        for (k, threads) in ["1", "2", "4", "4"].iter().enumerate() {
            let out = format!("{label}{k}.out");
            let side = format!("{label}{k}.side");
            let mut full: Vec<&str> = args.iter().map(|a| if *a == "LAT" || *a == "SIM" { side.as_str() } else { a }).collect();
            full.push(&out);
            focal(dir, &full, threads)?;
            let mut bytes = std::fs::read(dir.join(&out)).unwrap();
            if let Ok(extra) = std::fs::read(dir.join(&side)) {
                bytes.extend(extra);
            }
            outputs.push(bytes);
        }
        if outputs.windows(2).any(|w| w[0] != w[1]) {
            ok = false;
            bad.push(label);
        }
    }
    let detail = if ok { "7 commands x threads {1, 2, 4, 4 again}: identical bytes".to_string() } else { format!("differences in {bad:?}") };
    Ok((ok, detail))
}

fn stepwise_anomaly() -> Outcome {
    let ds = generate(&DgpSpec::survey_like(RECOVERY_N, DGP_SEED), Execution::Parallel).unwrap().dataset;
    let fits = fit_stepwise_logits(&ds, &covs(), Execution::Parallel).unwrap();
    let c89 = fits.pair(8).unwrap().coef(INCOME).unwrap().clone();
    let c910 = fits.pair(9).unwrap().coef(INCOME).unwrap().clone();
    let ok = c89.estimate > 0.0 && c89.significant_95() && c910.estimate < 0.0 && c910.significant_95();
    (ok, format!("8->9 {:.4} (z {:.1}), 9->10 {:.4} (z {:.1})", c89.estimate, c89.z(), c910.estimate, c910.z()))
}

fn numeracy_semi_elasticity() -> Outcome {
    let mut params = DgpSpec::survey_like(1, 0).params;
    params.beta_n[1] = NUMERACY_EDU;
    let ds = generate(&DgpSpec::survey_like(10, 1), Execution::Sequential).unwrap().dataset;
    let pred = predict_numeracy(&params, &ds).unwrap();
    let pct = pred.effects.iter().find(|e| e.covariate == EDUCATION).unwrap().low_odds_decrease_pct;
    let exact = 100.0 * (1.0 - (-NUMERACY_EDU).exp());
    ((pct - exact).abs() < 1e-9 && pct.round() == 20.0, format!("{pct:.2}% per education category"))
}

fn main() {
    let dir = tempfile::tempdir().expect("temporary directory");
    let mut results: Vec<(usize, &str, Outcome)> = Vec::new();
    let fail = |e: String| (false, e);
    match recovery_and_naive_bias(dir.path()) {
        Ok((a, b)) => {
            results.push((1, "parameter recovery", a));
            results.push((2, "naive ordered-logit bias", b));
        }
        Err(e) => {
            results.push((1, "parameter recovery", fail(e.clone())));
            results.push((2, "naive ordered-logit bias", fail(e)));
        }
    }
    results.push((3, "focal-value marginal-effect dips", focal_pattern()));
    results.push((4, "de-bias total-variation reduction", debias_pipeline()));
    results.push((5, "oracle equivalence", oracles()));
    results.push((6, "gradient correctness", gradients()));
    results.push((7, "normalization", normalization()));
    results.push((8, "determinism", determinism(dir.path()).unwrap_or_else(fail)));
    results.push((9, "step-wise income sign flip", stepwise_anomaly()));
    results.push((10, "numeracy semi-elasticity", numeracy_semi_elasticity()));

    let mut all = true;
    for (id, name, (ok, detail)) in &results {
        all &= ok;
        println!("{} [{id}] {name}: {detail}", if *ok { "PASS" } else { "FAIL" });
    }
    if !all {
        std::process::exit(1);
    }
}
