//! Reversible modular multiplication circuits: construction, simulation and
//! cost analysis.

pub mod angle;
pub mod builder;
pub mod circuit;
pub mod io;
pub mod numtheory;
pub mod sim;
pub mod adders;
pub mod fourier;
pub mod schedule;
pub mod modmul;
pub mod verify;
pub mod bench;
