//! Exact tests for whether observed dynamic choices can be explained by some
//! prior and sequential information structure.
//!
//! Every query returns a certificate that can be checked independently: a
//! deviation rule showing the data cannot be rationalized, or an obedient
//! triple (prior plus action recommendations) showing that it can.

pub mod analysis;
pub mod deviation;
pub mod error;
pub mod lp;
pub mod model;
pub mod oracle;
pub mod rationalize;

pub use error::{Error, Result};
