//! Dense state-vector simulation.

pub mod dense;
pub mod gate;
pub mod pauli;
pub mod random;
pub mod state;

pub use gate::{AngleSource, Axis, GateMatrix, GateOp, GateSequence, Generator, ParamRef, Targets, C64};
pub use pauli::{Pauli, PauliString};
pub use state::{StateVector, MAX_QUBITS};
