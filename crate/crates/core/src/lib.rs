//! Branching random walks on countable spaces: generating functions, extinction
//! probabilities, spectral growth rates, simulation and a catalog of reference spaces.

pub mod error;
pub mod model;
pub mod genfun;
pub mod spaces;
pub mod spectral;
pub mod simulate;
pub mod experiment;

pub use error::{Error, Result};
