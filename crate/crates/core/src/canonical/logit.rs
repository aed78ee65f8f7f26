use nalgebra::{DMatrix, DVector};

use super::{check_separation, CanonicalFit, Coefficient, FitKind, CONSTANT};
use crate::data::SurveyDataset;
use crate::error::{Error, Result};
use crate::logistic::cdf;
use crate::optim::{self, Concave, NewtonOptions};

struct BinaryLogit {
    x: DMatrix<f64>,
    y: Vec<f64>,
    w: Vec<f64>,
}

impl Concave for BinaryLogit {
    fn dim(&self) -> usize {
        self.x.ncols()
    }

    fn value(&self, theta: &DVector<f64>) -> f64 {
        let eta = &self.x * theta;
        (0..self.y.len())
            .map(|i| {
                let p = if self.y[i] > 0.5 { cdf(eta[i]) } else { cdf(-eta[i]) };
                self.w[i] * p.ln()
            })
            .sum()
    }

    fn derivatives(&self, theta: &DVector<f64>) -> (f64, DVector<f64>, DMatrix<f64>) {
        let p = self.dim();
        let eta = &self.x * theta;
        let mut value = 0.0;
        let mut g = DVector::zeros(p);
        let mut h = DMatrix::zeros(p, p);
        for i in 0..self.y.len() {
            let pi = cdf(eta[i]);
            let w = self.w[i];
            value += w * if self.y[i] > 0.5 { pi.ln() } else { cdf(-eta[i]).ln() };
            let row = self.x.row(i);
            let r = w * (self.y[i] - pi);
            let v = w * pi * (1.0 - pi);
            for a in 0..p {
                g[a] += r * row[a];
                for b in 0..p {
                    h[(a, b)] -= v * row[a] * row[b];
                }
            }
        }
        (value, g, h)
    }
}

/// Binary logit of the attached 0/1 indicator on an intercept and the named
/// covariates. Covariates constant in the sample are dropped and listed.
pub fn fit_binary_logit(ds: &SurveyDataset, covariates: &[String]) -> Result<CanonicalFit> {
    let ind = ds
        .indicator()
        .ok_or_else(|| Error::InvalidData("binary logit requires a 0/1 indicator".into()))?;
    let mut kept = Vec::new();
    let mut dropped = Vec::new();
    for name in covariates {
        let col = ds.column(name)?;
        if col.iter().all(|v| (v - col[0]).abs() <= 1e-12 * (1.0 + col[0].abs())) {
            dropped.push(name.clone());
        } else {
            kept.push(name.clone());
        }
    }
    let w: Vec<f64> = ds.weights().iter().map(|v| v / ds.total_weight()).collect();
    let y: Vec<f64> = ind.iter().map(|&v| f64::from(v)).collect();
    let problem = BinaryLogit { x: ds.design(&kept, true)?, y, w };
    let out = optim::maximize(&problem, DVector::zeros(problem.dim()), NewtonOptions::default());
    check_separation(ds, &kept, &out.theta.as_slice()[1..])?;
    if !out.converged {
        return Err(Error::NonConvergence { iterations: out.iterations, gradient_norm: out.gradient_norm() });
    }
    let cov = (-&out.hessian * ds.n_rows() as f64).try_inverse().ok_or(Error::RankDeficient)?;
    let scale = ds.total_weight();
    let ll = out.value * scale;
    let share = problem.y.iter().zip(&problem.w).map(|(y, w)| y * w).sum::<f64>();
    let null_ll = scale * (share * share.ln() + (1.0 - share) * (1.0 - share).ln());
    let names = std::iter::once(CONSTANT.to_string()).chain(kept.iter().cloned());
    let coefficients = names
        .enumerate()
        .map(|(j, name)| Coefficient { name, estimate: out.theta[j], se: cov[(j, j)].max(0.0).sqrt() })
        .collect();
    Ok(CanonicalFit {
        kind: FitKind::BinaryLogit,
        coefficients,
        thresholds: Vec::new(),
        categories: vec![0, 1],
        log_likelihood: Some(ll),
        rss: None,
        r2: None,
        adjusted_r2: None,
        pseudo_r2: Some(1.0 - ll / null_ll),
        n_obs: ds.n_rows(),
        sum_weights: ds.total_weight(),
        iterations: out.iterations,
        dropped,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::Selector;
    use crate::logistic::logit;
    use crate::scale::ResponseScale;

    #[test]
    fn constant_covariate_is_dropped() {
        let ds = SurveyDataset::new(
            vec![3, 4, 4, 4, 3],
            vec!["x".into()],
            vec![vec![2.0; 5]],
            None,
            ResponseScale::zero_to_ten(),
        )
        .unwrap()
        .subset(Selector::Pair(3))
        .unwrap();
        let fit = fit_binary_logit(&ds, &["x".into()]).unwrap();
        assert_eq!(fit.dropped, vec!["x".to_string()]);
        assert_eq!(fit.coefficients.len(), 1);
        assert!((fit.coef(CONSTANT).unwrap().estimate - logit(0.6)).abs() < 1e-9);
    }

    #[test]
    fn requires_indicator() {
        let ds = SurveyDataset::new(vec![3, 4], vec![], vec![], None, ResponseScale::zero_to_ten()).unwrap();
        assert!(fit_binary_logit(&ds, &[]).is_err());
    }
}
