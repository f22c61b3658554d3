//! Deep orthogonal Haar scattering networks.

pub mod classify;
pub mod error;
pub mod experiment;
pub mod features;
pub mod graph;
pub mod inverse;
pub mod io;
pub mod learn;
pub mod pipeline;
pub mod ring;
pub mod scatter;
pub mod select;

pub use error::{Error, Result};
pub use scatter::{HaarNetwork, InputCheck, Layer, Mode, Pairing};
