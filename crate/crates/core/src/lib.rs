//! Convex risk measures on finite variable-exponent Lebesgue spaces.
//!
//! The crate realizes, on a finite filtered probability space with values in
//! an ordered `R^d`, the Luxemburg norm of the variable-exponent space,
//! optimized certainty equivalents and their risk measures, minimal
//! penalties with numerical verification of the robust representation, and
//! conditional (dynamic) risk families with a time-consistency audit.

pub mod battery;
pub mod cli;
pub mod dual;
pub mod dynamic;
pub mod error;
pub mod oce;
pub mod ordered;
pub mod report;
pub mod scenario;
pub mod search;
pub mod space;
pub mod varexp;

pub use error::{Error, Result};
