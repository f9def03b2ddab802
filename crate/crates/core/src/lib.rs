//! Parameterized quantum circuits on a dense state-vector simulator, with
//! hybrid quantum-classical image classifiers and a training harness.

pub mod ansatz;
pub mod bench;
pub mod encodings;
pub mod error;
pub mod expressibility;
pub mod grad;
pub mod measure;
pub mod models;
pub mod nn;
pub mod qsim;

pub use error::{Error, Result};
