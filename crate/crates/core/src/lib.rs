//! Numerically exact dynamics and linear absorption spectra of a two-level
//! emitter coupled to a single lossy cavity mode and a structured phonon bath.
//!
//! The bath enters through a Huang-Rhys spectral density and is treated
//! without weak-coupling or Markov approximations: the discretized influence
//! functional is contracted as a tensor network, with the augmented density
//! tensor stored as a matrix product state and compressed by truncated SVDs
//! (the time-evolving matrix product operator scheme).
//!
//! Units: hbar = 1, energies in eV, times in 1/eV (1/eV = 0.6582 fs),
//! temperatures in K.

extern crate blas_src;

pub mod bath;
pub mod engine;
pub mod error;
pub mod influence;
pub mod response;
pub mod system;
pub mod tensor;
pub mod units;

pub use error::{Error, Result};
