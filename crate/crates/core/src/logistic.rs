//! Logistic distribution helpers shared by the ordinal and binary models.

/// Logistic CDF `1 / (1 + e^{-t})`, exact at `±∞`.
#[inline]
pub fn cdf(t: f64) -> f64 {
    if t >= 0.0 {
        1.0 / (1.0 + (-t).exp())
    } else {
        let e = t.exp();
        e / (1.0 + e)
    }
}

/// Logistic density `F(t)(1 - F(t))`.
#[inline]
pub fn pdf(t: f64) -> f64 {
    if t.is_infinite() {
        return 0.0;
    }
    let e = (-t.abs()).exp();
    e / ((1.0 + e) * (1.0 + e))
}

/// Derivative of the density, `f(t)(1 - 2F(t))`.
#[inline]
pub fn pdf_prime(t: f64) -> f64 {
    if t.is_infinite() {
        return 0.0;
    }
    pdf(t) * (1.0 - 2.0 * cdf(t))
}

#[inline]
pub fn logit(p: f64) -> f64 {
    (p / (1.0 - p)).ln()
}

/// `F(upper) - F(lower)` without cancellation when both arguments are large.
#[inline]
pub fn interval(upper: f64, lower: f64) -> f64 {
    if lower > 0.0 {
        cdf(-lower) - cdf(-upper)
    } else {
        cdf(upper) - cdf(lower)
    }
}
