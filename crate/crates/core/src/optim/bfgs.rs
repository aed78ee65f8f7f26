//! BFGS minimisation with a strong-Wolfe line search.

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct BfgsOptions {
    pub max_iter: usize,
    /// Convergence when the gradient max-norm falls below this.
    pub grad_tol: f64,
    pub c1: f64,
    pub c2: f64,
}

impl Default for BfgsOptions {
    fn default() -> Self {
        Self { max_iter: 1000, grad_tol: 1e-8, c1: 1e-4, c2: 0.9 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BfgsStatus {
    Converged,
    MaxIterations,
    /// No step satisfying the Wolfe conditions could be found; usually means
    /// the iterate sits at the objective's floating-point floor.
    LineSearchFailed,
    NonFinite,
}

#[derive(Debug, Clone)]
pub struct BfgsOutcome {
    pub x: Vec<f64>,
    pub value: f64,
    pub gradient: Vec<f64>,
    pub iterations: usize,
    pub evaluations: usize,
    pub status: BfgsStatus,
}

impl BfgsOutcome {
    pub fn gradient_norm(&self) -> f64 {
        max_abs(&self.gradient)
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn max_abs(a: &[f64]) -> f64 {
    a.iter().fold(0.0f64, |m, v| m.max(v.abs()))
}

struct Point {
    alpha: f64,
    value: f64,
    slope: f64,
    grad: Vec<f64>,
}

struct LineSearch<'a, F> {
    f: &'a mut F,
    x: &'a [f64],
    dir: &'a [f64],
    f0: f64,
    slope0: f64,
    c1: f64,
    c2: f64,
    evaluations: usize,
}

impl<F: FnMut(&[f64]) -> (f64, Vec<f64>)> LineSearch<'_, F> {
    fn eval(&mut self, alpha: f64) -> Point {
        let xt: Vec<f64> = self.x.iter().zip(self.dir).map(|(x, d)| x + alpha * d).collect();
        let (value, grad) = (self.f)(&xt);
        self.evaluations += 1;
        let value = if value.is_finite() { value } else { f64::INFINITY };
        let slope = if value.is_finite() { dot(&grad, self.dir) } else { f64::NAN };
        Point { alpha, value, slope, grad }
    }

    fn armijo(&self, p: &Point) -> bool {
        p.value <= self.f0 + self.c1 * p.alpha * self.slope0
    }

    fn curvature(&self, p: &Point) -> bool {
        p.slope.abs() <= -self.c2 * self.slope0
    }

    fn search(&mut self, alpha0: f64) -> Option<Point> {
        let mut prev = Point { alpha: 0.0, value: self.f0, slope: self.slope0, grad: Vec::new() };
        let mut alpha = alpha0;
        for i in 0..40 {
            let cur = self.eval(alpha);
            if !cur.value.is_finite() {
                // infeasible: shrink toward the last good point
                alpha = prev.alpha + 0.25 * (alpha - prev.alpha);
                continue;
            }
            if !self.armijo(&cur) || (i > 0 && cur.value >= prev.value) {
                return self.zoom(prev, cur);
            }
            if self.curvature(&cur) {
                return Some(cur);
            }
            if cur.slope >= 0.0 {
                return self.zoom(cur, prev);
            }
            prev = cur;
            alpha *= 2.0;
        }
        None
    }

    fn zoom(&mut self, mut lo: Point, mut hi: Point) -> Option<Point> {
        for _ in 0..40 {
            let (a, b) = (lo.alpha, hi.alpha);
            // quadratic interpolation from lo's value/slope and hi's value
            let mut t = {
                let d = b - a;
                let denom = 2.0 * (hi.value - lo.value - lo.slope * d);
                if denom.is_finite() && denom > 0.0 { a - lo.slope * d * d / denom } else { 0.5 * (a + b) }
            };
            let (left, right) = (a.min(b), a.max(b));
            let margin = 0.1 * (right - left);
            if !(t > left + margin && t < right - margin) {
                t = 0.5 * (a + b);
            }
            if (right - left) < 1e-16 * right.abs().max(1.0) {
                return None;
            }
            let cur = self.eval(t);
            if !cur.value.is_finite() || !self.armijo(&cur) || cur.value >= lo.value {
                hi = cur;
            } else {
                if self.curvature(&cur) {
                    return Some(cur);
                }
                if cur.slope * (hi.alpha - lo.alpha) >= 0.0 {
                    hi = lo;
                }
                lo = cur;
            }
        }
        (lo.alpha > 0.0 && lo.value < self.f0).then_some(lo)
    }
}

/// Minimises `f`, which returns the value and gradient at a point.
/// Non-finite values are treated as infeasible.
pub fn minimize<F>(mut f: F, x0: &[f64], opts: BfgsOptions) -> BfgsOutcome
where
    F: FnMut(&[f64]) -> (f64, Vec<f64>),
{
    let n = x0.len();
    let mut x = x0.to_vec();
    let (mut value, mut grad) = f(&x);
    let mut evaluations = 1;
    if !value.is_finite() {
        return BfgsOutcome { x, value, gradient: grad, iterations: 0, evaluations, status: BfgsStatus::NonFinite };
    }
    // inverse Hessian approximation, row-major
    let mut h = vec![0.0; n * n];
    for i in 0..n {
        h[i * n + i] = 1.0;
    }
    let mut first = true;
    let mut status = BfgsStatus::MaxIterations;
    let mut iterations = 0;
    while iterations < opts.max_iter {
        if max_abs(&grad) < opts.grad_tol {
            status = BfgsStatus::Converged;
            break;
        }
        iterations += 1;
        let mut dir: Vec<f64> = (0..n).map(|i| -dot(&h[i * n..(i + 1) * n], &grad)).collect();
        let mut slope0 = dot(&grad, &dir);
        if !(slope0 < 0.0) {
            // lost positive definiteness: restart from steepest descent
            h.iter_mut().for_each(|v| *v = 0.0);
            for i in 0..n {
                h[i * n + i] = 1.0;
            }
            first = true;
            dir = grad.iter().map(|g| -g).collect();
            slope0 = dot(&grad, &dir);
        }
        let alpha0 = if first { (1.0 / max_abs(&dir)).min(1.0) } else { 1.0 };
        let mut ls = LineSearch {
            f: &mut f,
            x: &x,
            dir: &dir,
            f0: value,
            slope0,
            c1: opts.c1,
            c2: opts.c2,
            evaluations: 0,
        };
        let found = ls.search(alpha0);
        evaluations += ls.evaluations;
        let Some(p) = found else {
            status = if max_abs(&grad) < opts.grad_tol {
                BfgsStatus::Converged
            } else {
                BfgsStatus::LineSearchFailed
            };
            break;
        };
        let s: Vec<f64> = dir.iter().map(|d| p.alpha * d).collect();
        let y: Vec<f64> = p.grad.iter().zip(&grad).map(|(a, b)| a - b).collect();
        for (xi, si) in x.iter_mut().zip(&s) {
            *xi += si;
        }
        value = p.value;
        grad = p.grad;
        let sy = dot(&s, &y);
        if sy > 1e-14 * dot(&s, &s).sqrt() * dot(&y, &y).sqrt() {
            if first {
                let scale = sy / dot(&y, &y);
                h.iter_mut().for_each(|v| *v *= scale);
                first = false;
            }
            bfgs_update(&mut h, &s, &y, sy);
        }
    }
    if status == BfgsStatus::MaxIterations && max_abs(&grad) < opts.grad_tol {
        status = BfgsStatus::Converged;
    }
    BfgsOutcome { x, value, gradient: grad, iterations, evaluations, status }
}

/// `H <- (I - ρ s yᵀ) H (I - ρ y sᵀ) + ρ s sᵀ`.
fn bfgs_update(h: &mut [f64], s: &[f64], y: &[f64], sy: f64) {
    let n = s.len();
    let rho = 1.0 / sy;
    let hy: Vec<f64> = (0..n).map(|i| dot(&h[i * n..(i + 1) * n], y)).collect();
    let yhy = dot(y, &hy);
    let coef = rho * rho * yhy + rho;
    for i in 0..n {
        for j in 0..n {
            h[i * n + j] += coef * s[i] * s[j] - rho * (hy[i] * s[j] + s[i] * hy[j]);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rosenbrock(x: &[f64]) -> (f64, Vec<f64>) {
        let (a, b) = (x[0], x[1]);
        let v = (1.0 - a).powi(2) + 100.0 * (b - a * a).powi(2);
        let g = vec![-2.0 * (1.0 - a) - 400.0 * a * (b - a * a), 200.0 * (b - a * a)];
        (v, g)
    }

    #[test]
    fn solves_rosenbrock() {
        let out = minimize(rosenbrock, &[-1.2, 1.0], BfgsOptions::default());
        assert_eq!(out.status, BfgsStatus::Converged);
        assert!((out.x[0] - 1.0).abs() < 1e-6 && (out.x[1] - 1.0).abs() < 1e-6);
    }

    #[test]
    fn respects_infeasible_region() {
        // minimum of x - ln x at x = 1, infeasible for x <= 0
        let f = |x: &[f64]| {
            if x[0] <= 0.0 {
                (f64::INFINITY, vec![0.0])
            } else {
                (x[0] - x[0].ln(), vec![1.0 - 1.0 / x[0]])
            }
        };
        let out = minimize(f, &[8.0], BfgsOptions::default());
        assert_eq!(out.status, BfgsStatus::Converged);
        assert!((out.x[0] - 1.0).abs() < 1e-7);
    }
}
