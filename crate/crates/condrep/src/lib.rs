//! Finite-support analysis of the inverse conditional-expectation problem:
//! given a joint law of (X, Y), decide when every nonnegative target f(X) can
//! be written as E[g(Y) | X] with g >= 0, construct such g, and apply the
//! machinery to a path-dependent-volatility calibration step.

pub mod counterexample;
pub mod error;
pub mod intervals;
pub mod linsolve;
pub mod measures;
pub mod mixing;
pub mod operators;
pub mod pdvcalib;
pub mod representation;
pub mod rngutil;
pub mod scalar;

pub use error::{CondrepError, Result};
