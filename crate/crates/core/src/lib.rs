//! Reward learning by simulating the past: inferring what a person wants from
//! the state of an environment they have already acted in.

pub mod baselines;
pub mod combiner;
pub mod error;
pub mod eval;
pub mod gridworlds;
pub mod mceirl;
pub mod mdp;
pub mod rlsp;
pub mod sampler;

pub use error::{Result, RlspError};
