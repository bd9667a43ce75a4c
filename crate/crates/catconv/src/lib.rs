//! Convergence assessment for MCMC samplers of discrete (categorical)
//! parameters.
//!
//! The library implements six convergence checks for collections of
//! categorical sample paths: a chi-squared test of marginal homogeneity,
//! a serial-dependence-corrected variant based on a fitted DAR(1) model,
//! two parametric bootstrap calibrations of the marginal statistic
//! (DAR(1) and Markov-chain null models), a transition-matrix homogeneity
//! test, and its parametric bootstrap calibration. Supporting pieces:
//! simulators for DAR(1), NDARMA(p, q) and first-order Markov chains,
//! chi-squared tail probabilities, a diagnostic runner with between /
//! within / sequential modes, and a simulation-study harness for
//! size/power experiments.

pub mod bootstrap;
pub mod chain;
pub mod diagnose;
mod error;
pub mod io;
pub mod simulate;
pub mod special;
pub mod stats;
pub mod study;
pub mod tables;

pub use error::{Error, Result};
