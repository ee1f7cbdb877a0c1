//! Mapped, hard-constrained physics-informed networks for exterior
//! Helmholtz problems, with the reference solvers used to check them.

pub mod ansatz;
pub mod baseline;
pub mod diff;
pub mod error;
pub mod geometry;
pub mod mapping;
pub mod network;
pub mod oracles;
pub mod residual;
pub mod runner;
pub mod special;
pub mod training;

pub use error::{Error, Result};
