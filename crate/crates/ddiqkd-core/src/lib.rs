//! Simulation and analysis toolkit for detector-device-independent QKD
//! (ddiQKD): two-qubit single-photon encoding, the deterministic
//! linear-optical Bell-state measurement, Monte-Carlo protocol runs under
//! noise and adversary models, and the Fock-space audit of the multi-photon
//! security condition.

pub mod analysis;
pub mod bell;
pub mod error;
pub mod fock;
pub mod noise;
pub mod protocol;
pub mod quantum;

pub use error::{QkdError, Result};
