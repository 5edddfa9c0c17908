//! Two-qubit quantum magnetometer: first-order Dyson propagation, readout
//! probabilities, quantum Fisher information, sensitivity and SNR analysis,
//! cross-checked against a numerically exact time-ordered propagator.

pub mod error;
pub mod evolution;
pub mod linalg;
pub mod metrology;
pub mod model;
pub mod optimize;
pub mod output;
pub mod protocol;
pub mod sweeps;

pub use error::{Error, Result};
pub use linalg::{Mat2, Mat4, StateVector, C64};
pub use model::SystemParams;
