//! Masked MSE, the derivative-enhanced loss and the derivative operators
//! (consecutive-pair differences and least-squares gradients) behind it.

mod dd;
mod del;
mod knn;
mod lsd;
mod mse;

pub use dd::{dd_map, dd_operator, PAIR_EPSILON};
pub use del::{del_loss, derivative_map, LossConfig, LossMode, LossPlan};
pub use knn::{knn_indices, knn_neighbors, NeighborTable, RANK_TOLERANCE};
pub use lsd::{
    directional_derivative, lsd_gradient, lsd_map, lsd_map_excluding, lsd_map_on_valid,
    GradientEstimate,
};
pub use mse::mse_masked;
