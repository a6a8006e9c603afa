pub mod bench;
pub mod closed_form;
pub mod clustering;
pub mod error;
pub mod estimators;
pub mod features;
pub mod rng;

pub use error::{HrfError, Result};
