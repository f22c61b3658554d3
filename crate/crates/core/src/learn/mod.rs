//! Unsupervised pairing learning.

mod blossom;
mod cost;
mod matching;
mod train;

pub use cost::{cost_l1, cost_matrix, cost_mixed, CostMatrix, Norm};
pub use matching::{match_exact, match_greedy, solve, Matcher};
pub use train::{empirical_variance, split_subsets, train_bagged, train_layerwise, BaggedModel, TrainConfig};
