//! Gibbs measures of interacting particle systems with singular energies.
//!
//! The crate evaluates the energies and rate functionals of the Gibbs law
//! `P_n ∝ e^{-beta_n H_n} l^{(x) n}`, samples from it, computes equilibrium
//! measures and checks Laplace asymptotics by exact enumeration.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod enumeration;
pub mod error;
pub mod ext;
pub mod functionals;
pub mod harness;
pub mod measures;
pub mod par;
pub mod potentials;
pub mod reference;
pub mod sampler;
pub mod schedule;
pub mod variational;

pub use error::{Error, Result};
