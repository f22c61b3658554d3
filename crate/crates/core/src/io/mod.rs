//! Datasets, grid pairings and model files.

mod dataset;
mod grid;
pub mod idx;
mod model;

pub use dataset::{
    from_idx, invert_permutation, load_csv, load_idx, permute, random_permutation, scramble, DatasetFile, Geometry,
};
pub use grid::{grid_networks, grid_pairings, grid_variant, Orientation};
pub use model::{relabel_network, ModelFile, TrainingInfo, FORMAT_VERSION};
