//! Local and global optimisers used by the estimators.

pub mod bfgs;
pub mod hopping;
pub mod newton;

pub use bfgs::{minimize, BfgsOptions, BfgsOutcome, BfgsStatus};
pub use hopping::{basin_hopping, HopRecord, HoppingOptions, HoppingOutcome};
pub use newton::{maximize, Concave, NewtonOptions, NewtonOutcome};
