//! Multi-step entailment proof search over next-step oracles, plus the
//! metrics used to verify the resulting proofs.

pub mod augment;
pub mod cli;
pub mod error;
pub mod kb;
pub mod metrics;
pub mod oracle;
pub mod search;
pub mod text;

pub use error::{Error, Result};
