//! Multiple-access channel resolvability codes.

pub mod cli;
pub mod encoder;
pub mod error;
pub mod evaluator;
pub mod hashing;
pub mod par;
pub mod polar;
pub mod probcore;
pub mod ratesplit;
pub mod rng;

pub use error::{Error, Result};
