//! Numerical workbench for Markovian cocycle perturbations of the shift
//! group on `L²(ℝ)`.
//!
//! Layers, bottom up:
//!
//! - [`grid`]: cell-grid model of `L²(ℝ)`, interval projections, shifts.
//! - [`blaschke`]: finite Blaschke products and the inner multiplier on the
//!   half-line, with a causal recursion and an FFT backend.
//! - [`model_space`]: the orthocomplement of the multiplier's range and the
//!   diagonal rotation group acting on it.
//! - [`cocycle`]: the model cocycle in several formula variants, with
//!   checks of the cocycle law, the Markov property and the limit at `−∞`.
//! - [`wold`]: index, Wold split and unitary-part spectrum of the perturbed
//!   isometry semigroup.
//! - [`hs`]: Hilbert–Schmidt defect of the cocycle, its two series, and a
//!   finite-dimensional Gaussian-equivalence check.
//! - [`wiener`]: Monte Carlo for the Girsanov-type cocycle on Wiener space.
//! - [`config`], [`report`], [`runner`]: JSON-driven experiment runs.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod blaschke;
pub mod cocycle;
pub mod config;
pub mod corpus;
pub mod error;
pub mod grid;
pub mod hs;
pub mod model_space;
pub mod numerics;
pub mod parallel;
pub mod report;
pub mod runner;
pub mod wiener;
pub mod wold;

pub use error::{Error, Result};
pub use grid::{GridFunction, GridSpec, Subspace, C64};
pub use parallel::Execution;

/// Grid used when a caller does not specify one: `[−12, 20)` with 2048 cells
/// (`dx = 1/64`, half-line length 20).
pub fn default_grid() -> GridSpec {
    GridSpec::new(-12.0, 20.0, 2048).expect("default grid is valid")
}
