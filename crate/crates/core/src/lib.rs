//! Computational ghost imaging with Kronecker-factored measurement matrices.
//!
//! Modules follow the data flow: [`keys`] draws the speckle factors and
//! permutations, [`forward`] simulates bucket signals, [`reconstruct`] and
//! [`crypto`] invert them, [`metrics`] scores the result.

pub mod bench;
pub mod cli;
pub mod crypto;
pub mod error;
pub mod formats;
pub mod forward;
pub mod keys;
pub mod linalg;
pub mod metrics;
pub mod reconstruct;

pub use error::{Error, Result};
