//! Theoretical utility of black-box classifiers under local differential
//! privacy: mechanism concentration, probabilistic robustness, and the
//! combined prediction-preservation bound, with empirical validation.

pub mod classifiers;
pub mod empirical;
pub mod error;
pub mod mechanisms;
pub mod quantify;
pub mod robustness;

pub use error::{Error, Result};
