//! DeepONet variants: Vanilla, POD and Fusion.

mod config;
mod model;
mod network;
mod pod;

pub use config::FusionConfig;
pub use model::{Affine, Normalization, OperatorModel, Variant};
pub use network::{
    branch_forward, branch_graph, conditioning_graph, fusion_forward, fusion_forward_injected,
    fusion_trunk_hidden, operator_graph, trunk_forward, trunk_graph, vanilla_forward, BranchGraph,
    TrunkGraph,
};
pub use pod::{check_pod_grid, pod_fit_basis, pod_forward, pod_graph, PodBasis};
