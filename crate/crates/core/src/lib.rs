//! Estimators for ordinal survey responses with focal-value reporting.

pub mod canonical;
pub mod data;
pub mod debias;
pub mod dgp;
pub mod error;
pub mod exec;
pub mod logistic;
pub mod mixture;
pub mod mlogit;
pub mod optim;
pub mod report;
pub mod scale;
pub mod stats;

pub use error::{Error, Result};
