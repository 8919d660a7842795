//! Dense complex linear algebra for registers of one to three qubits.

pub mod gates;
pub(crate) mod local;
pub mod matrix;
pub mod state;

pub use gates::{gate_matrix, lift, pauli, rotation, Axis, GateKind};
pub use matrix::{CMatrix, C64};
pub use state::{Observable, QuantumState};
