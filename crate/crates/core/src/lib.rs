//! Simulation and numerical checks for harmonic measure on critical stable
//! Galton-Watson trees.

pub mod analysis;
pub mod battery;
pub mod ctgw;
pub mod discrete;
pub mod error;
pub mod offspring;
pub mod par;
pub mod quad;
pub mod rde;
pub mod stats;
pub mod streams;

pub use error::{Error, Result};
