//! Bayesian A/B testing that stays valid under continuous monitoring.
//!
//! The Bayes factor of a normal-mean test keeps its meaning when the test is
//! stopped by any rule that only looks at data seen so far: among runs that
//! stop with Bayes factor `K`, H1 runs outnumber H0 runs by a factor `K`.
//! This crate computes those Bayes factors ([`model`]), replays streams
//! through stopping rules ([`stopping`]), checks the calibration claim by
//! simulation and by exact enumeration ([`simulate`]), learns the effect
//! prior from past experiments ([`prior_em`]), compares rejection boundaries
//! ([`boundary`]) and shows what breaks the property ([`pitfalls`]).

pub mod boundary;
pub mod cli;
pub mod error;
pub mod io;
pub mod model;
pub mod normal;
pub mod pitfalls;
pub mod prior_em;
pub mod simulate;
pub mod stopping;

pub use error::{Error, Result};
