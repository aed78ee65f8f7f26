use nalgebra::{DMatrix, DVector};

/// A concave objective with analytic first and second derivatives.
pub trait Concave {
    fn dim(&self) -> usize;

    /// Objective value; `f64::NEG_INFINITY` outside the feasible region.
    fn value(&self, theta: &DVector<f64>) -> f64;

    /// Value, gradient and Hessian at `theta`.
    fn derivatives(&self, theta: &DVector<f64>) -> (f64, DVector<f64>, DMatrix<f64>);
}

#[derive(Debug, Clone, Copy)]
pub struct NewtonOptions {
    pub max_iter: usize,
    /// Convergence when the gradient max-norm falls below this.
    pub grad_tol: f64,
    pub max_halvings: usize,
}

impl Default for NewtonOptions {
    fn default() -> Self {
        Self { max_iter: 200, grad_tol: 1e-8, max_halvings: 60 }
    }
}

#[derive(Debug, Clone)]
pub struct NewtonOutcome {
    pub theta: DVector<f64>,
    pub value: f64,
    pub gradient: DVector<f64>,
    pub hessian: DMatrix<f64>,
    pub iterations: usize,
    pub converged: bool,
    /// Objective after each accepted step, starting with the initial value.
    pub trace: Vec<f64>,
}

impl NewtonOutcome {
    pub fn gradient_norm(&self) -> f64 {
        self.gradient.amax()
    }
}

/// Solves `(-H) d = g`, regularising `-H` until it is positive definite.
fn newton_direction(hessian: &DMatrix<f64>, gradient: &DVector<f64>) -> DVector<f64> {
    let neg = -hessian;
    let scale = neg.diagonal().amax().max(1e-12);
    let mut ridge = 0.0;
    loop {
        let mut m = neg.clone();
        for i in 0..m.nrows() {
            m[(i, i)] += ridge;
        }
        if let Some(ch) = m.cholesky() {
            return ch.solve(gradient);
        }
        ridge = if ridge == 0.0 { 1e-10 * scale } else { ridge * 10.0 };
        if ridge > 1e10 * scale {
            return gradient / scale;
        }
    }
}

/// Damped Newton ascent with step halving. The objective never decreases
/// between accepted iterates.
pub fn maximize<P: Concave + ?Sized>(problem: &P, theta0: DVector<f64>, opts: NewtonOptions) -> NewtonOutcome {
    let mut theta = theta0;
    let (mut value, mut grad, mut hess) = problem.derivatives(&theta);
    let mut trace = vec![value];
    let mut iterations = 0;
    let mut converged = grad.amax() < opts.grad_tol;
    while !converged && iterations < opts.max_iter && value.is_finite() {
        iterations += 1;
        let dir = newton_direction(&hess, &grad);
        let mut step = 1.0;
        let mut accepted = None;
        for _ in 0..opts.max_halvings {
            let cand = &theta + &dir * step;
            let v = problem.value(&cand);
            if v.is_finite() && v >= value {
                accepted = Some(cand);
                break;
            }
            step *= 0.5;
        }
        let Some(cand) = accepted else {
            // stalled at the floating-point floor of the objective
            converged = grad.amax() < opts.grad_tol.sqrt() * 1e-2;
            break;
        };
        theta = cand;
        (value, grad, hess) = problem.derivatives(&theta);
        trace.push(value);
        converged = grad.amax() < opts.grad_tol;
    }
    NewtonOutcome { theta, value, gradient: grad, hessian: hess, iterations, converged, trace }
}

#[cfg(test)]
mod tests {
    use super::*;

    struct Quad;

    impl Concave for Quad {
        fn dim(&self) -> usize {
            2
        }
        fn value(&self, t: &DVector<f64>) -> f64 {
            -(t[0] - 1.0).powi(2) - 3.0 * (t[1] + 2.0).powi(2) - (t[0] - 1.0) * (t[1] + 2.0)
        }
        fn derivatives(&self, t: &DVector<f64>) -> (f64, DVector<f64>, DMatrix<f64>) {
            let (a, b) = (t[0] - 1.0, t[1] + 2.0);
            let g = DVector::from_vec(vec![-2.0 * a - b, -6.0 * b - a]);
            let h = DMatrix::from_row_slice(2, 2, &[-2.0, -1.0, -1.0, -6.0]);
            (self.value(t), g, h)
        }
    }

    #[test]
    fn quadratic_in_one_step() {
        let out = maximize(&Quad, DVector::from_vec(vec![10.0, 10.0]), NewtonOptions::default());
        assert!(out.converged);
        assert!(out.iterations <= 2);
        assert!((out.theta[0] - 1.0).abs() < 1e-12 && (out.theta[1] + 2.0).abs() < 1e-12);
        assert!(out.trace.windows(2).all(|w| w[1] >= w[0]));
    }
}
