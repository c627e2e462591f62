//! Graves-Lai lower bounds for combinatorial semi-bandits.

pub mod cli;
pub mod error;
pub mod glpg;
pub mod instance;
pub mod linalg;
pub mod polytope;
pub mod reference;
pub mod simulator;
pub mod structures;

pub use error::{GlError, Result};
