//! Partial identification of the average treatment effect with a binary
//! instrument, treatment and outcome.
//!
//! - [`model`]: counts, observed laws and validation.
//! - [`lp`]: a dense simplex solver and a vertex-enumeration oracle.
//! - [`bounds`]: sharp ATE bounds over principal strata, with optional
//!   monotonicity and outcome-risk caps.
//! - [`estimators`]: the Wald ratio, compliance shares and a sensitivity
//!   interval built from stratum-level effect ranges.
//! - [`simulate`]: preference-instrument scenarios that break monotonicity.

pub mod bounds;
pub mod error;
pub mod estimators;
pub mod lp;
pub mod model;
pub mod simulate;

pub use error::{Error, Result};
