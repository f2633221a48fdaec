//! Numerical laboratory for macroscopic-realism tests on superpositions of
//! coherent states.
//!
//! States live in a truncated Fock basis ([`fock`]), evolve under the
//! diagonal nonlinear Hamiltonian `Ω n⁴` with exact rational phases
//! ([`dynamics`]), and are read out through quadrature densities
//! ([`quadrature`]) and sign-binned "spin" measurements ([`measurement`]).
//! A closed-form engine for coherent-state superpositions ([`oracle`])
//! cross-checks the Fock engine. [`protocols`] assembles the inequality tests
//! and figure data, and [`cli`] drives them from the command line.

#![allow(clippy::neg_cmp_op_on_partial_ord)] // negated comparisons also reject NaN

pub mod cli;
pub mod dynamics;
pub mod error;
pub mod fock;
pub mod measurement;
pub mod oracle;
pub mod protocols;
pub mod quadrature;

mod gauss;

pub use error::{Error, Result};
