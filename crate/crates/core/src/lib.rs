//! Stochastic gradient-based optimization with noisy function evaluations.
//!
//! Central finite differences with a data-driven perturbation (Cor-CFD), a
//! gradient descent built on it with a noise-tolerant Armijo line search, and
//! the Kiefer-Wolfowitz and SPSA baselines, plus the replication harness and
//! command-line front end used to compare them.

pub mod cli;
pub mod error;
pub mod estimators;
pub mod harness;
pub mod metrics;
pub mod optimizers;
pub mod oracle;

pub use error::{Error, Result};
pub use oracle::{BoxDomain, NoisyOracle, Point, TestFunction};
