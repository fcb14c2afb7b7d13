//! Two-mode trapped-ion realization of driven even-order para-Bose oscillators.
//!
//! The crate builds the lab, crossed-coupling and Fulton-Gouterman frame
//! Hamiltonians of a qubit coupled to two vibrational modes, maps each
//! parity sector onto a deformed oscillator, and evolves the resulting
//! states to produce observable time series and Husimi Q grids.

pub mod algebra;
pub mod cli;
pub mod dynamics;
pub mod error;
pub mod frames;
pub mod hilbert;
pub mod partition;
pub mod specfun;
pub mod states;

pub use error::{Error, Result};
pub use hilbert::{DensityMatrix, Operator, Space, StateVector, C64};
