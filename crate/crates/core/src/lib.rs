//! Krein-system tools for half-line Sturm-Liouville spectral analysis.

// Validation uses negated comparisons so that NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod accelerant;
pub mod asympt;
pub mod coeffs;
pub mod error;
pub mod krein;
pub mod ode;
pub mod quad;
pub mod riccati;
pub mod spectral;

pub use error::{Error, Result};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");
