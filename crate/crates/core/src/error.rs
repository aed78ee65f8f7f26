use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("malformed delimited input: {0}")]
    Csv(#[from] csv::Error),

    #[error("column `{0}` is not present in the input")]
    MissingColumn(String),

    #[error("zero rows surviving filters ({dropped} dropped)")]
    NoRows { dropped: usize },

    #[error("invalid response scale: {0}")]
    InvalidScale(String),

    #[error("response {value} is outside the scale [{min}, {max}]")]
    OutOfScale { value: i32, min: i32, max: i32 },

    #[error("invalid dataset: {0}")]
    InvalidData(String),

    #[error("selection produced an empty dataset")]
    EmptySelection,

    #[error("design matrix is rank deficient")]
    RankDeficient,

    #[error("response category {0} has no observations")]
    EmptyCategory(i32),

    #[error("at least two distinct response categories are required")]
    TooFewCategories,

    #[error("optimizer did not converge after {iterations} iterations (gradient max-norm {gradient_norm:e})")]
    NonConvergence { iterations: usize, gradient_norm: f64 },

    #[error("perfect separation detected (coefficient norm {norm:.3e})")]
    Separation { norm: f64 },

    #[error("covariate `{0}` is not part of the model")]
    UnknownCovariate(String),

    #[error("invalid parameters: {0}")]
    InvalidParameters(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("group {0} has no observations")]
    EmptyGroup(String),

    #[error("all {0} estimation attempts failed")]
    AllFailed(usize),

    #[error("income coefficient is zero")]
    ZeroIncomeCoefficient,
}

pub type Result<T> = std::result::Result<T, Error>;
