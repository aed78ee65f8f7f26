//! Income compensating differentials.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A coefficient expressed as the percent change in income with the same
/// effect, in the exponential and the linear convention.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CompensatingDifferential {
    /// `100 * (exp(coef / income_coef) - 1)`
    pub exp_pct: f64,
    /// `100 * coef / income_coef`
    pub linear_pct: f64,
}

impl CompensatingDifferential {
    pub fn new(coef: f64, income_coef: f64) -> Result<Self> {
        if income_coef == 0.0 || !income_coef.is_finite() {
            return Err(Error::ZeroIncomeCoefficient);
        }
        let ratio = coef / income_coef;
        Ok(Self { exp_pct: 100.0 * ratio.exp_m1(), linear_pct: 100.0 * ratio })
    }
}

/// Percent of income equivalent to `coef`: `100 * (exp(coef / income_coef) - 1)`.
pub fn compensating_differential(coef: f64, income_coef: f64) -> Result<f64> {
    CompensatingDifferential::new(coef, income_coef).map(|c| c.exp_pct)
}
