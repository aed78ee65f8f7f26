use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use focal_core::canonical::{self, CanonicalFit, StepwiseFits, SubsetColumn};
use focal_core::data::{self, SurveyDataset, INCOME};
use focal_core::debias::{self, BiasOptions, BiasReport, DebiasRules, FocalRule, GroupMeans, GroupMeansOptions, SimulationSource};
use focal_core::dgp::{self, DgpSpec};
use focal_core::exec::Execution;
use focal_core::mixture::{self, BootstrapOptions, CutoffMode, MixtureConfig, MixtureEstimate, MixtureFit, NumeracyEffect};
use focal_core::mlogit::{self, EffectsMethod, EffectsOptions, MarginalEffectsTable, MultinomialFit, MultinomialOptions};
use focal_core::optim::HoppingOptions;
use focal_core::report::CompensatingDifferential;
use serde::Serialize;

use crate::args::{CommonArgs, DebiasArgs, DgpArgs, EffectsArgs, EffectsMethodArg, FitArgs, ModeArg, Model, ReportArgs, RuleArg, RuleArgs, SimulateArgs};
use crate::config::RunConfig;
use crate::document::{self, Document, Meta, SummaryRow};
use crate::{report, CliError};

/// Loaded inputs shared by every data-driven command.
struct Context {
    config: RunConfig,
    dataset: SurveyDataset,
    data_sha256: String,
    covariates: Vec<String>,
    exec: Execution,
}

impl Context {
    fn load(common: &CommonArgs, exec: Execution, adjust: impl FnOnce(&mut RunConfig)) -> Result<Self, CliError> {
        let mut config = RunConfig::load(common.config.as_deref())?;
        if let Some(seed) = common.seed {
            config.seed = seed;
        }
        if let Some(path) = &common.data {
            config.data.path = Some(path.display().to_string());
        }
        if !common.covariates.is_empty() {
            config.model.covariates = common.covariates.clone();
        }
        if common.no_weights {
            config.data.use_weights = false;
        }
        adjust(&mut config);

        let path = config.data.path.clone().ok_or_else(|| CliError::Usage("no input data: pass --data or set [data] path".into()))?;
        let bytes = std::fs::read(&path).map_err(|e| CliError::Usage(format!("cannot read {path}: {e}")))?;
        let scale = config.scale()?;
        let loaded = data::read_dataset(bytes.as_slice(), &config.schema(), scale)?;
        let mut dataset = loaded.dataset;
        if let Some(min_age) = config.data.min_age {
            let age = loaded.extra.get("age").ok_or_else(|| CliError::Usage("`min_age` needs `[data] age`".into()))?;
            dataset = dataset.filter_rows(|i| age[i] >= min_age)?;
        }
        let covariates = if config.model.covariates.is_empty() {
            dataset.covariate_names().to_vec()
        } else {
            config.model.covariates.clone()
        };
        Ok(Self { config, dataset, data_sha256: document::sha256_hex(&bytes), covariates, exec })
    }

    fn meta(&self, command: &str, model: &str) -> Meta {
        let n_cols = 1 + self.dataset.n_covariates() + usize::from(self.config.data.use_weights && self.config.data.weight.is_some());
        Meta::new(command, model, &self.config, Some(self.data_sha256.clone()), self.dataset.n_rows(), n_cols)
    }

    fn emit<R: Serialize>(self, out: Option<&Path>, command: &str, model: &str, summary: Vec<SummaryRow>, result: R) -> Result<(), CliError> {
        let doc = Document { meta: self.meta(command, model), config: self.config, summary, result };
        let text = document::to_json(&doc)?;
        write_or_print(out, &text)
    }

    fn multinomial_options(&self) -> MultinomialOptions {
        MultinomialOptions { base: self.config.model.base, exec: self.exec, ..Default::default() }
    }

    fn effects_options(&self) -> EffectsOptions {
        EffectsOptions {
            method: self.config.effects.method,
            replicates: self.config.effects.replicates,
            seed: self.config.seed,
            exec: self.exec,
        }
    }

    fn effect_covariates(&self) -> Vec<String> {
        if self.config.effects.covariates.is_empty() {
            self.covariates.clone()
        } else {
            self.config.effects.covariates.clone()
        }
    }

    fn rules(&self) -> Result<DebiasRules, CliError> {
        Ok(DebiasRules::only(self.dataset.scale(), &self.config.debias.rules)?)
    }
}

fn write_or_print(out: Option<&Path>, text: &str) -> Result<(), CliError> {
    match out {
        Some(p) => document::write_text(p, text),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn apply_effect_args(config: &mut RunConfig, e: &EffectsArgs) {
    if let Some(m) = e.effects_method {
        config.effects.method = match m {
            EffectsMethodArg::Bootstrap => EffectsMethod::Bootstrap,
            EffectsMethodArg::AnalyticDelta => EffectsMethod::AnalyticDelta,
        };
    }
    if let Some(r) = e.effect_replicates {
        config.effects.replicates = r;
    }
}

fn apply_rule_args(config: &mut RunConfig, r: &RuleArgs) {
    if !r.rules.is_empty() {
        config.debias.rules = r
            .rules
            .iter()
            .map(|a| match a {
                RuleArg::Bottom => FocalRule::Bottom,
                RuleArg::Middle => FocalRule::Middle,
                RuleArg::Top => FocalRule::Top,
            })
            .collect();
    }
    if let Some(n) = r.replication {
        config.debias.replication = n;
    }
}

fn write_effects_csv(path: Option<&PathBuf>, table: &MarginalEffectsTable) -> Result<(), CliError> {
    if let Some(p) = path {
        let mut buf = Vec::new();
        table.write_csv(&mut buf)?;
        std::fs::write(p, buf).map_err(|e| CliError::Usage(format!("cannot write {}: {e}", p.display())))?;
    }
    Ok(())
}

fn canonical_summary(fit: &CanonicalFit, prefix: &str) -> Vec<SummaryRow> {
    fit.coefficients
        .iter()
        .chain(&fit.thresholds)
        .map(|c| SummaryRow::new(format!("{prefix}{}", c.name), c.estimate, c.se))
        .collect()
}

#[derive(Serialize)]
struct NamedDifferential {
    covariate: String,
    #[serde(flatten)]
    value: CompensatingDifferential,
}

fn differentials(fit: &CanonicalFit) -> Vec<NamedDifferential> {
    let Some(income) = fit.coef(INCOME) else { return Vec::new() };
    fit.coefficients
        .iter()
        .filter(|c| c.name != INCOME && c.name != canonical::CONSTANT)
        .filter_map(|c| {
            CompensatingDifferential::new(c.estimate, income.estimate).ok().map(|value| NamedDifferential { covariate: c.name.clone(), value })
        })
        .collect()
}

#[derive(Serialize)]
struct CanonicalResult {
    fit: CanonicalFit,
    compensating_differentials: Vec<NamedDifferential>,
}

#[derive(Serialize)]
struct MultinomialResult {
    fit: MultinomialFit,
    effects: MarginalEffectsTable,
}

#[derive(Serialize)]
struct Numeracy {
    mean_p_high: f64,
    effects: Vec<NumeracyEffect>,
}

#[derive(Serialize)]
#[serde(untagged)]
enum MixtureOutcome {
    Bootstrap(Box<MixtureFit>),
    FullSample(Box<MixtureEstimate>),
}

#[derive(Serialize)]
struct MixtureResult {
    mode: CutoffMode,
    estimate: MixtureOutcome,
    numeracy: Numeracy,
}

/// Well-being slopes keep the bare covariate name so that they line up with
/// canonical coefficients; other mixture parameters are namespaced.
fn summary_name(name: &str) -> String {
    if let Some(cov) = name.strip_prefix("wellbeing:") {
        cov.to_string()
    } else if name.starts_with("numeracy:") {
        name.to_string()
    } else {
        format!("mixture:{name}")
    }
}

pub fn fit(a: &FitArgs, exec: Execution) -> Result<(), CliError> {
    let ctx = Context::load(&a.common, exec, |c| {
        apply_effect_args(c, &a.effects);
        if let Some(b) = a.bootstrap {
            c.mixture.bootstrap = b;
        }
        if let Some(h) = a.hops {
            c.mixture.hops = h;
        }
        if let Some(h) = a.replicate_hops {
            c.mixture.replicate_hops = Some(h);
        }
        if let Some(m) = a.mode {
            c.mixture.mode = match m {
                ModeArg::Free => CutoffMode::Free,
                ModeArg::Tied => CutoffMode::Tied,
            };
        }
    })?;
    let out = a.common.out.as_deref();
    let label = a.model.label();
    let ds = &ctx.dataset;
    match a.model {
        Model::Ols | Model::Ologit => {
            let fit = if a.model == Model::Ols {
                canonical::fit_ols(ds, &ctx.covariates)?
            } else {
                canonical::fit_ordered_logit(ds, &ctx.covariates)?
            };
            let summary = canonical_summary(&fit, "");
            let compensating_differentials = differentials(&fit);
            ctx.emit(out, "fit", label, summary, CanonicalResult { fit, compensating_differentials })
        }
        Model::Mlogit => {
            let fit = mlogit::fit_multinomial_logit(ds, &ctx.covariates, &ctx.multinomial_options())?;
            let effects = mlogit::marginal_effects_by_response(&fit, ds, &ctx.effect_covariates(), &ctx.effects_options())?;
            write_effects_csv(a.effects.effects_out.as_ref(), &effects)?;
            let mut summary = Vec::new();
            for eq in &fit.equations {
                for (c, (b, se)) in eq.coefficients.iter().zip(&eq.standard_errors).enumerate() {
                    let name = if c == 0 { canonical::CONSTANT } else { fit.covariates[c - 1].as_str() };
                    summary.push(SummaryRow::new(format!("eq{}:{name}", eq.category), *b, *se));
                }
            }
            for c in &effects.covariates {
                for r in &c.by_response {
                    summary.push(SummaryRow::new(format!("ame:{}:{}", c.covariate, r.value), r.effect.estimate, f64::NAN));
                }
            }
            ctx.emit(out, "fit", label, summary, MultinomialResult { fit, effects })
        }
        Model::Mixture => fit_mixture(ctx, out),
    }
}

fn fit_mixture(ctx: Context, out: Option<&Path>) -> Result<(), CliError> {
    let m = &ctx.config.mixture;
    let config = MixtureConfig {
        mode: m.mode,
        wellbeing: ctx.covariates.clone(),
        numeracy: ctx.config.data.numeracy.clone(),
        hopping: HoppingOptions { n_hops: m.hops, step: m.step, seed: ctx.config.seed, ..Default::default() },
        init: None,
        exec: ctx.exec,
    };
    let (estimate, params, summary) = match m.bootstrap {
        0 => {
            let est = mixture::fit_mixture(&ctx.dataset, &config)?;
            let summary = est.params.named_values().into_iter().map(|(n, v)| SummaryRow::new(summary_name(&n), v, f64::NAN)).collect();
            let params = est.params.clone();
            (MixtureOutcome::FullSample(Box::new(est)), params, summary)
        }
        1 => return Err(CliError::Usage("mixture bootstrap needs at least two replicates".into())),
        b => {
            let opts = BootstrapOptions {
                replicates: b,
                keep_fraction: m.keep,
                replicate_hops: m.replicate_hops,
                warm_start: m.warm_start,
                seed: ctx.config.seed,
            };
            let fit = mixture::bootstrap_fit(&ctx.dataset, &config, &opts)?;
            let summary = fit.estimates.iter().map(|e| SummaryRow::new(summary_name(&e.name), e.estimate, e.se)).collect();
            let params = fit.point.clone();
            (MixtureOutcome::Bootstrap(Box::new(fit)), params, summary)
        }
    };
    let pred = mixture::predict_numeracy(&params, &ctx.dataset)?;
    let numeracy = Numeracy { mean_p_high: pred.mean_p_high, effects: pred.effects };
    let mode = m.mode;
    ctx.emit(out, "fit", "mixture", summary, MixtureResult { mode, estimate, numeracy })
}

pub fn stepwise(a: &CommonArgs, exec: Execution) -> Result<(), CliError> {
    let ctx = Context::load(a, exec, |_| {})?;
    let fits: StepwiseFits = canonical::fit_stepwise_logits(&ctx.dataset, &ctx.covariates, ctx.exec)?;
    let summary = fits.fits.iter().flat_map(|p| canonical_summary(&p.fit, &format!("step:{}>{}:", p.lower, p.upper))).collect();
    ctx.emit(a.out.as_deref(), "stepwise", "stepwise", summary, fits)
}

pub fn subsets(a: &CommonArgs, exec: Execution) -> Result<(), CliError> {
    let ctx = Context::load(a, exec, |_| {})?;
    let cols: Vec<SubsetColumn> = canonical::fit_subset_models(&ctx.dataset, &ctx.covariates)?;
    let summary = cols.iter().flat_map(|c| canonical_summary(&c.fit, &format!("{}[{}]:", c.label, c.sample))).collect();
    ctx.emit(a.out.as_deref(), "subsets", "subsets", summary, cols)
}

#[derive(Serialize)]
struct DebiasResult {
    rules: Vec<FocalRule>,
    bias: BiasReport,
    group: Option<String>,
    group_means: Option<Vec<GroupMeans>>,
}

pub fn debias(a: &DebiasArgs, exec: Execution) -> Result<(), CliError> {
    let ctx = Context::load(&a.common, exec, |c| {
        apply_rule_args(c, &a.rules);
        if a.group.is_some() {
            c.debias.group = a.group.clone();
        }
        if let Some(r) = a.group_replicates {
            c.debias.group_replicates = r;
        }
    })?;
    let rules = ctx.rules()?;
    let d = &ctx.config.debias;
    let opts = BiasOptions { replication_factor: d.replication, seed: ctx.config.seed, exec: ctx.exec, multinomial: ctx.multinomial_options() };
    let bias = debias::estimate_focal_bias(&ctx.dataset, &ctx.covariates, &rules, &opts)?;
    let group_means = match &d.group {
        None => None,
        Some(g) => {
            let gopts = GroupMeansOptions { replicates: d.group_replicates, seed: ctx.config.seed, exec: ctx.exec };
            Some(debias::mean_eswl_by_group(&ctx.dataset, &ctx.covariates, g, &rules, &ctx.multinomial_options(), &gopts)?)
        }
    };
    let summary = bias.covariates.iter().map(|c| SummaryRow::new(format!("bias:{}", c.covariate), c.bias, c.se)).collect();
    let result = DebiasResult { rules: d.rules.clone(), bias, group: d.group.clone(), group_means };
    ctx.emit(a.common.out.as_deref(), "debias", "debias", summary, result)
}

#[derive(Serialize)]
struct SimulateResult {
    source: SimulationSource,
    replication_factor: usize,
    n_simulated: usize,
    response_counts: BTreeMap<i32, usize>,
    effects: MarginalEffectsTable,
}

pub fn simulate(a: &SimulateArgs, exec: Execution) -> Result<(), CliError> {
    let ctx = Context::load(&a.common, exec, |c| {
        apply_rule_args(c, &a.rules);
        apply_effect_args(c, &a.effects);
    })?;
    let rules = ctx.rules()?;
    let fit = mlogit::fit_multinomial_logit(&ctx.dataset, &ctx.covariates, &ctx.multinomial_options())?;
    let profiles = mlogit::predict_profiles(&fit, &ctx.dataset)?;
    let r = ctx.config.debias.replication;
    let sim = debias::simulate_counterfactual(&ctx.dataset, &profiles, r, ctx.config.seed, a.modified.then_some(&rules), ctx.exec)?;
    if let Some(p) = &a.data_out {
        let mut buf = Vec::new();
        data::write_dataset(&sim.dataset, &mut buf)?;
        std::fs::write(p, buf).map_err(|e| CliError::Usage(format!("cannot write {}: {e}", p.display())))?;
    }
    let mut counts: BTreeMap<i32, usize> = ctx.dataset.scale().values().map(|v| (v, 0)).collect();
    for s in sim.dataset.responses() {
        *counts.entry(*s).or_default() += 1;
    }
    let effects = debias::reestimate_on_simulated(&sim, &ctx.effect_covariates(), &ctx.multinomial_options(), &ctx.effects_options())?;
    write_effects_csv(a.effects.effects_out.as_ref(), &effects)?;
    let n = sim.dataset.n_rows() as f64;
    let summary = counts.iter().map(|(v, c)| SummaryRow::new(format!("share:{v}"), *c as f64 / n, f64::NAN)).collect();
    let result = SimulateResult { source: sim.source, replication_factor: r, n_simulated: sim.dataset.n_rows(), response_counts: counts, effects };
    ctx.emit(a.common.out.as_deref(), "simulate", "simulate", summary, result)
}

pub fn dgp(a: &DgpArgs, exec: Execution) -> Result<(), CliError> {
    let mut spec = match &a.spec {
        Some(p) => {
            let text = std::fs::read_to_string(p).map_err(|e| CliError::Usage(format!("cannot read {}: {e}", p.display())))?;
            serde_json::from_str::<DgpSpec>(&text).map_err(|e| CliError::Usage(format!("invalid generator spec {}: {e}", p.display())))?
        }
        None => DgpSpec::survey_like(1000, 0),
    };
    if let Some(n) = a.n {
        spec.n = n;
    }
    if let Some(s) = a.seed {
        spec.seed = s;
    }
    spec.validate().map_err(|e| CliError::Usage(e.to_string()))?;
    let generated = dgp::generate(&spec, exec)?;
    let mut buf = Vec::new();
    data::write_dataset(&generated.dataset, &mut buf)?;
    document::write_text(&a.out, std::str::from_utf8(&buf).expect("delimited output is UTF-8"))?;
    if let Some(p) = &a.latent {
        let mut buf = Vec::new();
        dgp::write_latent(&generated.latent, &mut buf)?;
        std::fs::write(p, buf).map_err(|e| CliError::Usage(format!("cannot write {}: {e}", p.display())))?;
    }
    Ok(())
}

pub fn report(a: &ReportArgs) -> Result<(), CliError> {
    let docs = a.inputs.iter().map(|p| document::read_document(p)).collect::<Result<Vec<_>, _>>()?;
    write_or_print(a.out.as_deref(), &report::comparison_table(&docs))
}
