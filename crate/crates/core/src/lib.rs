//! Asymptotic complexity analysis for VASS Markov decision processes.
//!
//! Given a strongly connected VASS MDP, [`classifier::full_classification`]
//! decides for the termination time, every counter and every transition
//! whether its complexity is Θ(n^k) for some k or at least exponential.
//! VASS Markov chains are classified completely by
//! [`classifier::classify_markov_chain`]. The [`simulator`] module estimates
//! fixed-probability bounds by Monte-Carlo simulation to cross-check verdicts.

pub mod classifier;
pub mod components;
pub mod constraints;
pub mod generate;
pub mod graph;
pub mod model;
pub mod ratlp;
pub mod report;
pub mod simulator;

#[cfg(test)]
pub(crate) mod fixtures;

pub use model::{parse_model, Observable, Rational, StateKind, VassMdp};

/// Version of the report format emitted by [`report`].
pub const FORMAT_VERSION: &str = "1";
