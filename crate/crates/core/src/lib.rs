//! Reversible nearest-neighbour parallel update on a two dimensional torus:
//! state representation, transition law, energy landscape, reference
//! paths, exact potential theory, spectral quantities and simulation.

pub mod energy;
pub mod error;
pub mod gth;
pub mod io;
pub mod kernel;
pub mod landscape;
pub mod lattice;
pub mod mc;
pub mod paths;
pub mod potential;
pub mod space;
pub mod spectral;

pub use error::{Error, Result};
