//! Entropic quantities and constrained capacities of finite-dimensional
//! quantum channels.
//!
//! All logarithms are base 2; every entropy and capacity is in bits.

pub mod capacity;
pub mod channel;
pub mod entropy;
pub mod error;
pub mod gaussian;
pub mod properties;
pub mod qmat;

pub use error::{Error, Result};
