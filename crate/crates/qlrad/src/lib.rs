//! Numerical toolkit for weighted quasilinear radial elliptic problems.
//!
//! Given three radial potentials — a weight `A` on the gradient, a
//! nonnegative mass weight `V`, and a positive weight `K` on the
//! nonlinearity — the crate
//!
//! * derives the admissible exponent windows for the nonlinearity from the
//!   power-law behaviour of the potentials ([`exponents`]),
//! * probes the embedding suprema on small balls and exterior domains and
//!   verifies their proven decay rates ([`probe`]),
//! * computes nonnegative mountain-pass critical points of the associated
//!   energy functional on a truncated graded radial grid ([`solver`]).
//!
//! The `qlrad` binary drives the same pipeline from a TOML configuration.

pub mod assembly;
pub mod config;
pub mod error;
pub mod exponents;
pub mod grid;
pub mod potential;
pub mod probe;
pub mod report;
pub mod solver;

mod dd;
mod quad;

pub use error::{Error, Result};
pub use exponents::{ExponentWindow, ProblemParams};
pub use grid::{GridFunction, RadialGrid};
pub use potential::PotentialExpr;
