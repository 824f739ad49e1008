//! Bayes-optimal detection of the moment a Markov chain switches from one
//! transition kernel to another.
//!
//! The switch time `theta` has a geometric prior, and a stop at `tau` counts
//! as a success when `|theta - tau| <= d`. The crate computes the posterior
//! process, the threshold function of the optimal rule by value iteration,
//! the optimal success probability, and exact and Monte Carlo evaluations of
//! arbitrary stopping rules.

pub mod error;
pub mod cli;
pub mod example;
pub mod likelihood;
pub mod model;
pub mod posterior;
pub mod sim;
pub mod stopping;

pub use error::{DisorderError, Result};
pub use model::{DisorderModel, GeometricPrior, MarkovKernel, ModelFile, StateSpace, Trajectory};
pub use stopping::{Policy, PolicyKind, Solution, StopOutcome, ValueTable};
