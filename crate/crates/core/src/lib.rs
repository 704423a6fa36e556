//! Two-mode-two-state (TMTS) nonadiabatic model.
//!
//! Builds the diabatic two-surface Hamiltonian in a truncated harmonic
//! oscillator product basis, diagonalizes it densely, and analyses the
//! eigenstates: electronic-vibrational entanglement entropy with its
//! surface-overlap / population-difference decomposition, level statistics
//! (unfolding, nearest-neighbour spacings, Δ3 rigidity, amplitude
//! distribution) and real-space densities on the diabatic surfaces.

// `!(x < tol)` style checks are deliberate: they also reject NaN
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cache;
pub mod commands;
pub mod config;
pub mod entanglement;
mod error;
pub mod model;
pub mod output;
pub mod realspace;
pub mod solver;
pub mod spectra;
pub mod svg;

pub use error::{Error, Result};
pub use model::{BasisSpec, ModelParams, Surface};
pub use solver::EigenResult;

/// Crate version echoed in output metadata.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
