//! Multinomial logit over response values, per-response average marginal
//! effects, and effects on the expected response.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::canonical::CONSTANT;
use crate::data::SurveyDataset;
use crate::error::{Error, Result};
use crate::exec::{self, Execution};
use crate::optim::{self, Concave, NewtonOptions};
use crate::stats;

/// Probabilities over the full response scale, indexed by response value.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProbabilityProfile {
    pub min_value: i32,
    pub probs: Vec<f64>,
}

impl ProbabilityProfile {
    pub fn new(min_value: i32, probs: Vec<f64>) -> Self {
        Self { min_value, probs }
    }

    pub fn max_value(&self) -> i32 {
        self.min_value + self.probs.len() as i32 - 1
    }

    /// Probability of response `s`; zero outside the scale.
    pub fn get(&self, s: i32) -> f64 {
        usize::try_from(s - self.min_value).ok().and_then(|i| self.probs.get(i)).copied().unwrap_or(0.0)
    }

    pub fn sum(&self) -> f64 {
        self.probs.iter().sum()
    }

    pub fn expected_value(&self) -> f64 {
        self.probs.iter().enumerate().map(|(i, p)| (self.min_value + i as i32) as f64 * p).sum()
    }

    pub fn is_valid(&self, tol: f64) -> bool {
        self.probs.iter().all(|p| p.is_finite() && *p >= 0.0) && (self.sum() - 1.0).abs() <= tol
    }
}

#[derive(Debug, Clone)]
pub struct MultinomialOptions {
    /// Response values modelled; defaults to every value of the scale.
    pub categories: Option<Vec<i32>>,
    /// Defaults to the lowest modelled category.
    pub base: Option<i32>,
    pub exec: Execution,
    /// Warm start in the layout of [`MultinomialFit::theta`].
    pub init: Option<Vec<f64>>,
    pub newton: NewtonOptions,
}

impl Default for MultinomialOptions {
    fn default() -> Self {
        Self { categories: None, base: None, exec: Execution::Parallel, init: None, newton: NewtonOptions::default() }
    }
}

/// One non-base equation: constant followed by covariate slopes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Equation {
    pub category: i32,
    pub coefficients: Vec<f64>,
    pub standard_errors: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MultinomialFit {
    pub base_category: i32,
    pub categories: Vec<i32>,
    /// Slope names; every equation also has a leading constant.
    pub covariates: Vec<String>,
    pub equations: Vec<Equation>,
    pub log_likelihood: f64,
    pub n_obs: usize,
    pub iterations: usize,
    #[serde(skip)]
    pub covariance: Option<DMatrix<f64>>,
}

impl MultinomialFit {
    /// Fit object with given coefficients and no estimation results.
    pub fn with_theta(categories: Vec<i32>, base: i32, covariates: Vec<String>, theta: &[f64]) -> Result<Self> {
        let p = covariates.len() + 1;
        if categories.len() < 2 || !categories.contains(&base) || theta.len() != (categories.len() - 1) * p {
            return Err(Error::InvalidParameters("coefficient layout does not match categories".into()));
        }
        let eq_cats = categories.iter().copied().filter(|&c| c != base);
        let equations = eq_cats
            .zip(theta.chunks(p))
            .map(|(category, c)| Equation { category, coefficients: c.to_vec(), standard_errors: vec![f64::NAN; p] })
            .collect();
        Ok(Self {
            base_category: base,
            categories,
            covariates,
            equations,
            log_likelihood: f64::NAN,
            n_obs: 0,
            iterations: 0,
            covariance: None,
        })
    }

    /// Flattened non-base coefficients, equation by equation.
    pub fn theta(&self) -> Vec<f64> {
        self.equations.iter().flat_map(|e| e.coefficients.iter().copied()).collect()
    }

    pub fn coefficient_names(&self) -> Vec<String> {
        std::iter::once(CONSTANT.to_string()).chain(self.covariates.iter().cloned()).collect()
    }

    /// Coefficient rows for every category in `categories` order, base row zero.
    pub fn beta_rows(&self) -> Vec<Vec<f64>> {
        let p = self.covariates.len() + 1;
        let mut eqs = self.equations.iter();
        self.categories
            .iter()
            .map(|&c| if c == self.base_category { vec![0.0; p] } else { eqs.next().expect("one equation per category").coefficients.clone() })
            .collect()
    }

    fn layout(&self) -> Layout {
        Layout::new(&self.categories, self.base_category)
    }
}

#[derive(Debug, Clone)]
struct Layout {
    m: usize,
    base_idx: usize,
}

impl Layout {
    fn new(categories: &[i32], base: i32) -> Self {
        Self { m: categories.len(), base_idx: categories.iter().position(|&c| c == base).expect("base present") }
    }

    /// Equation index of category index `c`.
    fn eq(&self, c: usize) -> Option<usize> {
        match c.cmp(&self.base_idx) {
            std::cmp::Ordering::Less => Some(c),
            std::cmp::Ordering::Equal => None,
            std::cmp::Ordering::Greater => Some(c - 1),
        }
    }

    /// Softmax probabilities over categories for design row `x` (with constant).
    fn probs(&self, theta: &[f64], x: &[f64], out: &mut [f64]) {
        let p = x.len();
        for (c, o) in out.iter_mut().enumerate() {
            *o = match self.eq(c) {
                None => 0.0,
                Some(e) => theta[e * p..(e + 1) * p].iter().zip(x).map(|(a, b)| a * b).sum(),
            };
        }
        let max = out.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let mut z = 0.0;
        for o in out.iter_mut() {
            *o = (*o - max).exp();
            z += *o;
        }
        for o in out.iter_mut() {
            *o /= z;
        }
    }
}

/// Weighted multinomial-logit log-likelihood in the layout of
/// [`MultinomialFit::theta`].
#[derive(Debug, Clone)]
pub struct MultinomialLikelihood {
    x: Vec<f64>,
    p: usize,
    y: Vec<usize>,
    w: Vec<f64>,
    total_weight: f64,
    layout: Layout,
    exec: Execution,
}

impl MultinomialLikelihood {
    pub fn new(ds: &SurveyDataset, covariates: &[String], categories: &[i32], base: i32, exec: Execution) -> Result<Self> {
        if categories.len() < 2 {
            return Err(Error::TooFewCategories);
        }
        if !categories.contains(&base) {
            return Err(Error::InvalidConfig(format!("base category {base} is not modelled")));
        }
        let mut counts = vec![0usize; categories.len()];
        let y = ds
            .responses()
            .iter()
            .map(|s| {
                let c = categories
                    .iter()
                    .position(|c| c == s)
                    .ok_or_else(|| Error::InvalidData(format!("response {s} is not a modelled category")))?;
                counts[c] += 1;
                Ok(c)
            })
            .collect::<Result<Vec<_>>>()?;
        if let Some(c) = counts.iter().position(|&n| n == 0) {
            return Err(Error::EmptyCategory(categories[c]));
        }
        let raw = ds.row_major(covariates)?;
        let k = covariates.len();
        let p = k + 1;
        let mut x = Vec::with_capacity(ds.n_rows() * p);
        for i in 0..ds.n_rows() {
            x.push(1.0);
            x.extend_from_slice(&raw[i * k..(i + 1) * k]);
        }
        Ok(Self {
            x,
            p,
            y,
            w: ds.weights().to_vec(),
            total_weight: ds.total_weight(),
            layout: Layout::new(categories, base),
            exec,
        })
    }

    pub fn n_params(&self) -> usize {
        (self.layout.m - 1) * self.p
    }

    fn n_rows(&self) -> usize {
        self.y.len()
    }

    /// Total weighted log-likelihood.
    pub fn log_likelihood(&self, theta: &[f64]) -> f64 {
        self.accumulate(theta, false).0 * self.total_weight
    }

    /// Gradient of [`Self::log_likelihood`].
    pub fn gradient(&self, theta: &[f64]) -> Vec<f64> {
        self.accumulate(theta, false).1.iter().map(|g| g * self.total_weight).collect()
    }

    /// Mean objective per unit weight, its gradient, and optionally the Hessian.
    fn accumulate(&self, theta: &[f64], hessian: bool) -> (f64, Vec<f64>, Vec<f64>) {
        let np = self.n_params();
        let (m, p) = (self.layout.m, self.p);
        let hdim = if hessian { np * np } else { 0 };
        let parts = exec::map_chunks(self.exec, self.n_rows(), |range| {
            let mut v = 0.0;
            let mut g = vec![0.0; np];
            let mut h = vec![0.0; hdim];
            let mut pr = vec![0.0; m];
            let mut xx = vec![0.0; p * p];
            for i in range {
                let xi = &self.x[i * p..(i + 1) * p];
                let w = self.w[i] / self.total_weight;
                self.layout.probs(theta, xi, &mut pr);
                v += w * pr[self.y[i]].max(1e-300).ln();
                for c in 0..m {
                    let Some(e) = self.layout.eq(c) else { continue };
                    let r = w * (f64::from(u8::from(c == self.y[i])) - pr[c]);
                    for a in 0..p {
                        g[e * p + a] += r * xi[a];
                    }
                }
                if !hessian {
                    continue;
                }
                for a in 0..p {
                    for b in 0..p {
                        xx[a * p + b] = w * xi[a] * xi[b];
                    }
                }
                for c in 0..m {
                    let Some(e) = self.layout.eq(c) else { continue };
                    for d in c..m {
                        let Some(f) = self.layout.eq(d) else { continue };
                        let coef = if c == d { pr[c] * (1.0 - pr[c]) } else { -pr[c] * pr[d] };
                        for a in 0..p {
                            for b in 0..p {
                                h[(e * p + a) * np + f * p + b] -= coef * xx[a * p + b];
                            }
                        }
                    }
                }
            }
            (v, g, h)
        });
        let mut value = 0.0;
        let mut grad = vec![0.0; np];
        let mut hess = vec![0.0; hdim];
        for (v, g, h) in parts {
            value += v;
            grad.iter_mut().zip(&g).for_each(|(a, b)| *a += b);
            hess.iter_mut().zip(&h).for_each(|(a, b)| *a += b);
        }
        if hessian {
            // mirror the upper block triangle
            for r in 0..np {
                for c in 0..r {
                    if (r / p) > (c / p) {
                        hess[r * np + c] = hess[c * np + r];
                    }
                }
            }
        }
        (value, grad, hess)
    }

    /// Constants at log share ratios against the base, slopes zero.
    fn share_start(&self) -> Vec<f64> {
        let m = self.layout.m;
        let mut shares = vec![0.0; m];
        for (c, w) in self.y.iter().zip(&self.w) {
            shares[*c] += w;
        }
        let mut theta = vec![0.0; self.n_params()];
        for c in 0..m {
            if let Some(e) = self.layout.eq(c) {
                theta[e * self.p] = (shares[c] / shares[self.layout.base_idx]).ln();
            }
        }
        theta
    }
}

impl Concave for MultinomialLikelihood {
    fn dim(&self) -> usize {
        self.n_params()
    }

    fn value(&self, theta: &DVector<f64>) -> f64 {
        self.accumulate(theta.as_slice(), false).0
    }

    fn derivatives(&self, theta: &DVector<f64>) -> (f64, DVector<f64>, DMatrix<f64>) {
        let np = self.n_params();
        let (v, g, h) = self.accumulate(theta.as_slice(), true);
        (v, DVector::from_vec(g), DMatrix::from_row_slice(np, np, &h))
    }
}

/// Weighted maximum-likelihood multinomial logit of the response on a
/// constant and the named covariates.
pub fn fit_multinomial_logit(ds: &SurveyDataset, covariates: &[String], opts: &MultinomialOptions) -> Result<MultinomialFit> {
    let categories = opts.categories.clone().unwrap_or_else(|| ds.scale().values().collect());
    let base = opts.base.unwrap_or_else(|| *categories.iter().min().expect("nonempty categories"));
    let lik = MultinomialLikelihood::new(ds, covariates, &categories, base, opts.exec)?;
    let theta0 = match &opts.init {
        Some(t) if t.len() == lik.n_params() => t.clone(),
        Some(_) => return Err(Error::InvalidParameters("warm start has the wrong length".into())),
        None => lik.share_start(),
    };
    let out = optim::maximize(&lik, DVector::from_vec(theta0), opts.newton);
    if !out.converged {
        return Err(Error::NonConvergence { iterations: out.iterations, gradient_norm: out.gradient_norm() });
    }
    let cov = (-&out.hessian * ds.n_rows() as f64).try_inverse();
    let mut fit = MultinomialFit::with_theta(categories, base, covariates.to_vec(), out.theta.as_slice())?;
    if let Some(cov) = &cov {
        let p = lik.p;
        for (e, eq) in fit.equations.iter_mut().enumerate() {
            eq.standard_errors = (0..p).map(|a| cov[(e * p + a, e * p + a)].max(0.0).sqrt()).collect();
        }
    }
    fit.covariance = cov;
    fit.log_likelihood = out.value * lik.total_weight;
    fit.n_obs = ds.n_rows();
    fit.iterations = out.iterations;
    Ok(fit)
}

fn design_rows(fit: &MultinomialFit, ds: &SurveyDataset) -> Result<Vec<f64>> {
    let k = fit.covariates.len();
    let raw = ds.row_major(&fit.covariates)?;
    let mut x = Vec::with_capacity(ds.n_rows() * (k + 1));
    for i in 0..ds.n_rows() {
        x.push(1.0);
        x.extend_from_slice(&raw[i * k..(i + 1) * k]);
    }
    Ok(x)
}

/// Predicted profile for every row of `ds`.
pub fn predict_profiles(fit: &MultinomialFit, ds: &SurveyDataset) -> Result<Vec<ProbabilityProfile>> {
    predict_with(fit, &fit.theta(), ds)
}

fn predict_with(fit: &MultinomialFit, theta: &[f64], ds: &SurveyDataset) -> Result<Vec<ProbabilityProfile>> {
    let scale = ds.scale();
    let idx: Vec<usize> = fit
        .categories
        .iter()
        .map(|&c| scale.index_of(c).ok_or(Error::OutOfScale { value: c, min: scale.min_value(), max: scale.max_value() }))
        .collect::<Result<_>>()?;
    let x = design_rows(fit, ds)?;
    let p = fit.covariates.len() + 1;
    let layout = fit.layout();
    let mut pr = vec![0.0; layout.m];
    Ok((0..ds.n_rows())
        .map(|i| {
            layout.probs(theta, &x[i * p..(i + 1) * p], &mut pr);
            let mut probs = vec![0.0; scale.n_categories()];
            for (c, &j) in idx.iter().enumerate() {
                probs[j] = pr[c];
            }
            ProbabilityProfile::new(scale.min_value(), probs)
        })
        .collect())
}

/// Weighted average over rows of dP_j/dx for each covariate, indexed by
/// scale position. Returned in the order of `covariates`.
fn ames_with(fit: &MultinomialFit, theta: &[f64], ds: &SurveyDataset, covariates: &[usize]) -> Result<Vec<Vec<f64>>> {
    let scale = ds.scale();
    let p = fit.covariates.len() + 1;
    let layout = fit.layout();
    let x = design_rows(fit, ds)?;
    let rows: Vec<Vec<f64>> = (0..layout.m)
        .map(|c| match layout.eq(c) {
            None => vec![0.0; p],
            Some(e) => theta[e * p..(e + 1) * p].to_vec(),
        })
        .collect();
    let idx: Vec<usize> = fit.categories.iter().map(|&c| scale.index_of(c).expect("categories checked")).collect();
    let mut out = vec![vec![0.0; scale.n_categories()]; covariates.len()];
    let mut pr = vec![0.0; layout.m];
    let total = ds.total_weight();
    for i in 0..ds.n_rows() {
        let w = ds.weights()[i] / total;
        layout.probs(theta, &x[i * p..(i + 1) * p], &mut pr);
        for (o, &k) in out.iter_mut().zip(covariates) {
            let avg: f64 = pr.iter().zip(&rows).map(|(q, r)| q * r[k]).sum();
            for c in 0..layout.m {
                o[idx[c]] += w * pr[c] * (rows[c][k] - avg);
            }
        }
    }
    Ok(out)
}

fn covariate_positions(fit: &MultinomialFit, covariates: &[String]) -> Result<Vec<usize>> {
    covariates
        .iter()
        .map(|name| {
            fit.covariates
                .iter()
                .position(|c| c == name)
                .map(|k| k + 1)
                .ok_or_else(|| Error::UnknownCovariate(name.clone()))
        })
        .collect()
}

/// Point average marginal effects of `covariate` on each response value.
pub fn average_marginal_effects(fit: &MultinomialFit, ds: &SurveyDataset, covariate: &str) -> Result<Vec<f64>> {
    let k = covariate_positions(fit, &[covariate.to_string()])?;
    Ok(ames_with(fit, &fit.theta(), ds, &k)?.remove(0))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EffectsMethod {
    Bootstrap,
    AnalyticDelta,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct EffectsOptions {
    pub method: EffectsMethod,
    pub replicates: usize,
    pub seed: u64,
    pub exec: Execution,
}

impl Default for EffectsOptions {
    fn default() -> Self {
        Self { method: EffectsMethod::Bootstrap, replicates: 200, seed: 0, exec: Execution::Parallel }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EffectEstimate {
    pub estimate: f64,
    pub ci_lo: f64,
    pub ci_hi: f64,
}

impl EffectEstimate {
    pub fn excludes(&self, v: f64) -> bool {
        v < self.ci_lo || v > self.ci_hi
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResponseEffect {
    pub value: i32,
    #[serde(flatten)]
    pub effect: EffectEstimate,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CovariateEffects {
    pub covariate: String,
    pub by_response: Vec<ResponseEffect>,
    pub expected_response: EffectEstimate,
}

impl CovariateEffects {
    pub fn at(&self, value: i32) -> Option<&EffectEstimate> {
        self.by_response.iter().find(|r| r.value == value).map(|r| &r.effect)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MarginalEffectsTable {
    pub method: EffectsMethod,
    /// Bootstrap replicates that produced a fit.
    pub replicates_used: usize,
    pub covariates: Vec<CovariateEffects>,
}

impl MarginalEffectsTable {
    pub fn covariate(&self, name: &str) -> Option<&CovariateEffects> {
        self.covariates.iter().find(|c| c.covariate == name)
    }

    /// Plot-ready rows `covariate,response_value,effect,ci_lo,ci_hi`.
    pub fn write_csv<W: std::io::Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(["covariate", "response_value", "effect", "ci_lo", "ci_hi"])?;
        for c in &self.covariates {
            for r in &c.by_response {
                w.write_record([
                    c.covariate.clone(),
                    r.value.to_string(),
                    crate::data::format_real(r.effect.estimate),
                    crate::data::format_real(r.effect.ci_lo),
                    crate::data::format_real(r.effect.ci_hi),
                ])?;
            }
        }
        w.flush().map_err(|e| Error::Io { path: "<csv>".into(), source: e })?;
        Ok(())
    }
}

fn expected_of(values: &[i32], ame: &[f64]) -> f64 {
    values.iter().zip(ame).map(|(v, a)| f64::from(*v) * a).sum()
}

/// Average marginal effects by response value for each named covariate,
/// with 95% intervals from a row bootstrap or the delta method.
pub fn marginal_effects_by_response(
    fit: &MultinomialFit,
    ds: &SurveyDataset,
    covariates: &[String],
    opts: &EffectsOptions,
) -> Result<MarginalEffectsTable> {
    let ks = covariate_positions(fit, covariates)?;
    let theta = fit.theta();
    let point = ames_with(fit, &theta, ds, &ks)?;
    let values: Vec<i32> = ds.scale().values().collect();
    let n_cells = values.len();

    // intervals[c][j] for j < n_cells, expected response at j == n_cells
    let (intervals, used): (Vec<Vec<(f64, f64)>>, usize) = match opts.method {
        EffectsMethod::Bootstrap => {
            let reps = bootstrap_ames(fit, ds, &ks, opts);
            let used = reps.len();
            if used < 2 {
                return Err(Error::AllFailed(opts.replicates));
            }
            let iv = (0..ks.len())
                .map(|c| {
                    (0..=n_cells)
                        .map(|j| {
                            let draws: Vec<f64> = reps
                                .iter()
                                .map(|r| if j < n_cells { r[c][j] } else { expected_of(&values, &r[c]) })
                                .collect();
                            stats::percentile_interval(&draws)
                        })
                        .collect()
                })
                .collect();
            (iv, used)
        }
        EffectsMethod::AnalyticDelta => {
            let cov = fit
                .covariance
                .as_ref()
                .ok_or_else(|| Error::InvalidParameters("delta method needs the estimated covariance".into()))?;
            let np = theta.len();
            let mut jac = vec![vec![vec![0.0; np]; n_cells + 1]; ks.len()];
            for a in 0..np {
                let h = 1e-6 * theta[a].abs().max(1.0);
                let mut up = theta.clone();
                let mut dn = theta.clone();
                up[a] += h;
                dn[a] -= h;
                let fu = ames_with(fit, &up, ds, &ks)?;
                let fd = ames_with(fit, &dn, ds, &ks)?;
                for c in 0..ks.len() {
                    for j in 0..n_cells {
                        jac[c][j][a] = (fu[c][j] - fd[c][j]) / (2.0 * h);
                    }
                    jac[c][n_cells][a] = (expected_of(&values, &fu[c]) - expected_of(&values, &fd[c])) / (2.0 * h);
                }
            }
            let iv = jac
                .iter()
                .enumerate()
                .map(|(c, rows)| {
                    rows.iter()
                        .enumerate()
                        .map(|(j, g)| {
                            let gv = DVector::from_column_slice(g);
                            let sd = (gv.transpose() * cov * &gv)[(0, 0)].max(0.0).sqrt();
                            let est = if j < n_cells { point[c][j] } else { expected_of(&values, &point[c]) };
                            (est - 1.959963984540054 * sd, est + 1.959963984540054 * sd)
                        })
                        .collect()
                })
                .collect();
            (iv, 0)
        }
    };

    let covariates = covariates
        .iter()
        .enumerate()
        .map(|(c, name)| {
            let by_response = values
                .iter()
                .enumerate()
                .map(|(j, &value)| ResponseEffect {
                    value,
                    effect: EffectEstimate { estimate: point[c][j], ci_lo: intervals[c][j].0, ci_hi: intervals[c][j].1 },
                })
                .collect();
            let (lo, hi) = intervals[c][n_cells];
            CovariateEffects {
                covariate: name.clone(),
                by_response,
                expected_response: EffectEstimate { estimate: expected_of(&values, &point[c]), ci_lo: lo, ci_hi: hi },
            }
        })
        .collect();
    Ok(MarginalEffectsTable { method: opts.method, replicates_used: used, covariates })
}

/// Effect of `covariate` on the expected response, sum over j of j times
/// the average marginal effect on P_j.
pub fn expected_swl_marginal_effect(
    fit: &MultinomialFit,
    ds: &SurveyDataset,
    covariate: &str,
    opts: &EffectsOptions,
) -> Result<EffectEstimate> {
    let table = marginal_effects_by_response(fit, ds, &[covariate.to_string()], opts)?;
    Ok(table.covariates[0].expected_response)
}

/// Row-resampled refits warm-started at `fit`; failed replicates are dropped.
fn bootstrap_ames(fit: &MultinomialFit, ds: &SurveyDataset, ks: &[usize], opts: &EffectsOptions) -> Vec<Vec<Vec<f64>>> {
    let n = ds.n_rows();
    let fit_opts = MultinomialOptions {
        categories: Some(fit.categories.clone()),
        base: Some(fit.base_category),
        exec: Execution::Sequential,
        init: Some(fit.theta()),
        newton: NewtonOptions::default(),
    };
    exec::map_indexed(opts.exec, opts.replicates, |b| {
        let mut rng = exec::stream_rng(exec::derive_seed(opts.seed, b as u64), 0);
        let rows: Vec<usize> = (0..n).map(|_| rng.random_range(0..n)).collect();
        let sample = ds.select_rows(&rows).ok()?;
        let refit = fit_multinomial_logit(&sample, &fit.covariates, &fit_opts).ok()?;
        ames_with(&refit, &refit.theta(), &sample, ks).ok()
    })
    .into_iter()
    .flatten()
    .collect()
}
