//! CHSH correlations for two qubits, the fixed four-outcome POVM experiment
//! that needs no setting choices, and the local models that reproduce both.

pub mod error;
pub mod quantum_core;
pub mod measurements;

pub use error::{Error, Result};
pub mod fixed_povm;
pub mod lhv_models;
pub mod harness;
