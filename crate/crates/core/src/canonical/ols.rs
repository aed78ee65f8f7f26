use nalgebra::{DMatrix, DVector};

use super::{CanonicalFit, Coefficient, FitKind, CONSTANT};
use crate::data::SurveyDataset;
use crate::error::{Error, Result};

/// Weighted least squares of the response on an intercept and the named
/// covariates. Standard errors use the classical formula with weights
/// rescaled to mean one.
pub fn fit_ols(ds: &SurveyDataset, covariates: &[String]) -> Result<CanonicalFit> {
    let n = ds.n_rows();
    let x = ds.design(covariates, true)?;
    let p = x.ncols();
    if n < p {
        return Err(Error::RankDeficient);
    }
    let w = ds.normalized_weights();
    let sw: Vec<f64> = w.iter().map(|v| v.sqrt()).collect();
    let xw = DMatrix::from_fn(n, p, |i, j| x[(i, j)] * sw[i]);
    let y: Vec<f64> = ds.responses().iter().map(|&s| f64::from(s)).collect();
    let yw = DVector::from_iterator(n, y.iter().zip(&sw).map(|(y, s)| y * s));

    let qr = xw.qr();
    let r = qr.r();
    let rmax = r.diagonal().amax();
    if r.diagonal().iter().any(|d| d.abs() <= 1e-10 * rmax) {
        return Err(Error::RankDeficient);
    }
    let qty = qr.q().transpose() * &yw;
    let beta = r.solve_upper_triangular(&qty).ok_or(Error::RankDeficient)?;
    let r_inv = r.solve_upper_triangular(&DMatrix::identity(p, p)).ok_or(Error::RankDeficient)?;
    let xtx_inv = &r_inv * r_inv.transpose();

    let fitted = &x * &beta;
    let sum_w: f64 = w.iter().sum();
    let ybar = y.iter().zip(&w).map(|(y, w)| y * w).sum::<f64>() / sum_w;
    let rss: f64 = (0..n).map(|i| w[i] * (y[i] - fitted[i]).powi(2)).sum();
    let tss: f64 = (0..n).map(|i| w[i] * (y[i] - ybar).powi(2)).sum();
    // a saturated fit (n == p) has no residual degrees of freedom
    let dof = (n - p) as f64;
    let sigma2 = if n > p { rss / dof } else { f64::NAN };
    let r2 = if tss > 0.0 { 1.0 - rss / tss } else { 1.0 };
    let adj = if n > p { 1.0 - (1.0 - r2) * (n - 1) as f64 / dof } else { f64::NAN };

    let names = std::iter::once(CONSTANT.to_string()).chain(covariates.iter().cloned());
    let coefficients = names
        .enumerate()
        .map(|(j, name)| Coefficient { name, estimate: beta[j], se: (sigma2 * xtx_inv[(j, j)]).sqrt() })
        .collect();
    Ok(CanonicalFit {
        kind: FitKind::Ols,
        coefficients,
        thresholds: Vec::new(),
        categories: Vec::new(),
        log_likelihood: None,
        rss: Some(rss),
        r2: Some(r2),
        adjusted_r2: Some(adj),
        pseudo_r2: None,
        n_obs: n,
        sum_weights: ds.total_weight(),
        iterations: 0,
        dropped: Vec::new(),
    })
}
