//! Simulation, verification and command-line front end for `stbc-core`.

pub mod cli;
pub mod error;
pub mod sim;
pub mod verify;

pub use error::LabError;
