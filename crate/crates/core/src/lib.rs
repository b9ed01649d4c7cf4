//! Estimating the size of a hidden stochastic-block-model graph from an
//! induced subgraph sample with observed degrees and block labels.

pub mod error;
pub mod experiment;
pub mod graph;
pub mod nsum;
pub mod observation;
pub mod pulse;
pub mod summary;

pub use error::{Error, Result};
