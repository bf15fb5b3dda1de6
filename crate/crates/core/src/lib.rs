//! Active cyber defense contagion dynamics.
//!
//! The crate implements the A-SIS model (a well-mixed SIS population in
//! which a fraction of nodes actively clean up infected peers) and its
//! A-SIR variant, together with:
//!
//! - threshold classification, closed-form equilibria and nullclines ([`analysis`]),
//! - an adaptive Runge–Kutta integrator with peak tracking ([`integrator`]),
//! - grid certification of max-separable Lyapunov functions,
//! - optimal budget allocation between defender count and effectiveness ([`investment`]),
//! - an exact finite-population stochastic simulator used as an oracle ([`stochastic`]),
//! - the scenario-driven `acdyn` command line front end ([`cli`]).

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analysis;
pub mod cli;
pub mod error;
pub mod integrator;
pub mod investment;
pub mod models;
pub mod stochastic;

pub use error::{Error, Result};
