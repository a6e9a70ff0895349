pub mod bounds;
pub mod distributions;
pub mod error;
pub mod logexact;
pub mod polycone;
pub mod qusearch;
pub mod subset;

pub use distributions::{EntropyVector, JointPMF, QuVerdict};
pub use error::{Error, Result};
pub use logexact::{LogLinear, Sign};
pub use subset::Subset;
