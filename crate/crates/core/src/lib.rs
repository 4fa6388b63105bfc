//! Nonclassical single-mode states from click detection and displacements.
//!
//! A coherent cavity state is repeatedly conditioned on detector clicks, whose
//! back action is the photon subtraction operator `B = sum |n-1><n|`, and moved
//! around phase space with displacements. Depending on how many positions are
//! visited the result is close to a squeezed vacuum or a generalized squeezed
//! state, and one more click turns it into a squeezed cat-like state.
//!
//! * [`fock`] builds truncated states and operators.
//! * [`protocol`] runs the detection/displacement sequences.
//! * [`analysis`] computes quadrature squeezing, fidelities, Husimi Q grids,
//!   entanglement potential and the optimal-click curve.
//! * [`optimizer`] fits target states and drives parameter sweeps.
//! * [`cli`] is the command-line front end.

pub mod analysis;
pub mod cli;
pub mod error;
pub mod fock;
pub mod optimizer;
pub mod protocol;

pub use error::{Error, Result};
pub use num_complex::Complex64 as C64;
