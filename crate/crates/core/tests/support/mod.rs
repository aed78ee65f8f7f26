//! Independent reference computations shared by integration and acceptance
//! tests. Nothing here calls the estimators under test.

#![allow(dead_code)]

use focal_core::data::SurveyDataset;
use focal_core::exec::stream_rng;
use focal_core::scale::ResponseScale;
use rand::Rng;

pub fn logistic(t: f64) -> f64 {
    1.0 / (1.0 + (-t).exp())
}

/// Small dataset with one covariate `x` and responses in {0, 1, 2} drawn
/// from an ordered logit with slope 0.9 and cutoffs (-0.6, 0.8).
pub fn small_three_category(n: usize, seed: u64) -> SurveyDataset {
    let mut rng = stream_rng(seed, 0);
    let mut x = Vec::with_capacity(n);
    let mut y = Vec::with_capacity(n);
    for i in 0..n {
        let xi: f64 = rng.random_range(-1.5..1.5);
        let u: f64 = rng.random_range(1e-9..1.0 - 1e-9);
        let latent = 0.9 * xi + (u / (1.0 - u)).ln();
        // guarantee every category appears
        let s = match i {
            0 => 0,
            1 => 1,
            2 => 2,
            _ if latent < -0.6 => 0,
            _ if latent < 0.8 => 1,
            _ => 2,
        };
        x.push(xi);
        y.push(s);
    }
    SurveyDataset::new(y, vec!["x".into()], vec![x], None, ResponseScale::zero_to_ten()).unwrap()
}

/// Ordered-logit log-likelihood for `[beta, tau_0, tau_1]` over categories {0, 1, 2}.
pub fn ologit_reference(theta: &[f64], x: &[f64], y: &[i32]) -> f64 {
    let (b, t0, t1) = (theta[0], theta[1], theta[2]);
    if t1 <= t0 {
        return f64::NEG_INFINITY;
    }
    x.iter()
        .zip(y)
        .map(|(&xi, &s)| {
            let e = b * xi;
            let p = match s {
                0 => logistic(t0 - e),
                1 => logistic(t1 - e) - logistic(t0 - e),
                _ => 1.0 - logistic(t1 - e),
            };
            p.ln()
        })
        .sum()
}

/// Multinomial-logit log-likelihood for `[a1, b1, a2, b2]` with base category 0.
pub fn mlogit_reference(theta: &[f64], x: &[f64], y: &[i32]) -> f64 {
    x.iter()
        .zip(y)
        .map(|(&xi, &s)| {
            let v = [0.0, theta[0] + theta[1] * xi, theta[2] + theta[3] * xi];
            let denom: f64 = v.iter().map(|u| u.exp()).sum();
            v[s as usize] - denom.ln()
        })
        .sum()
}

/// Brute-force maximization: full tensor grid of `points` per axis around the
/// best point so far, shrinking the box each level.
pub fn grid_maximize(f: impl Fn(&[f64]) -> f64, center: &[f64], half_width: f64, points: usize, levels: usize) -> Vec<f64> {
    let d = center.len();
    let mut best = center.to_vec();
    let mut best_val = f(&best);
    let mut w = half_width;
    let total = points.pow(d as u32);
    let mut trial = vec![0.0; d];
    for _ in 0..levels {
        let c = best.clone();
        for idx in 0..total {
            let mut r = idx;
            for (k, t) in trial.iter_mut().enumerate() {
                let g = r % points;
                r /= points;
                *t = c[k] - w + 2.0 * w * g as f64 / (points - 1) as f64;
            }
            let v = f(&trial);
            if v > best_val {
                best_val = v;
                best.copy_from_slice(&trial);
            }
        }
        w *= 0.6;
    }
    best
}

/// Solves `(X'X) b = X'y` by Gaussian elimination with partial pivoting.
pub fn normal_equations(rows: &[Vec<f64>], y: &[f64]) -> Vec<f64> {
    let p = rows[0].len();
    let mut a = vec![vec![0.0; p + 1]; p];
    for (r, &yi) in rows.iter().zip(y) {
        for i in 0..p {
            for j in 0..p {
                a[i][j] += r[i] * r[j];
            }
            a[i][p] += r[i] * yi;
        }
    }
    for col in 0..p {
        let piv = (col..p).max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs())).unwrap();
        a.swap(col, piv);
        for row in 0..p {
            if row != col {
                let m = a[row][col] / a[col][col];
                for k in col..=p {
                    a[row][k] -= m * a[col][k];
                }
            }
        }
    }
    (0..p).map(|i| a[i][p] / a[i][i]).collect()
}

/// Discretized Gaussian kernel on 0..=10, normalized.
pub fn smooth_baseline(mu: f64, sd: f64) -> Vec<f64> {
    let raw: Vec<f64> = (0..=10).map(|s| (-(f64::from(s) - mu).powi(2) / (2.0 * sd * sd)).exp()).collect();
    let t: f64 = raw.iter().sum();
    raw.into_iter().map(|v| v / t).collect()
}

/// `(1 - share) * b + share * contraction(b)` with groups {0,1,2}, {3..7}, {8,9,10}.
pub fn mix_with_contraction(b: &[f64], share: f64) -> Vec<f64> {
    let mut c = vec![0.0; 11];
    c[0] = b[0..3].iter().sum();
    c[5] = b[3..8].iter().sum();
    c[10] = b[8..11].iter().sum();
    b.iter().zip(&c).map(|(x, y)| (1.0 - share) * x + share * y).collect()
}

pub fn total_variation(a: &[f64], b: &[f64]) -> f64 {
    0.5 * a.iter().zip(b).map(|(x, y)| (x - y).abs()).sum::<f64>()
}

/// Largest relative error between `grad` and central differences of `f`,
/// relative to `max(1, |fd|)`.
pub fn max_fd_error(f: impl Fn(&[f64]) -> f64, grad: &[f64], theta: &[f64], h: f64) -> f64 {
    let mut worst = 0.0f64;
    let mut t = theta.to_vec();
    for k in 0..theta.len() {
        t[k] = theta[k] + h;
        let up = f(&t);
        t[k] = theta[k] - h;
        let down = f(&t);
        t[k] = theta[k];
        let fd = (up - down) / (2.0 * h);
        worst = worst.max((grad[k] - fd).abs() / fd.abs().max(1.0));
    }
    worst
}
