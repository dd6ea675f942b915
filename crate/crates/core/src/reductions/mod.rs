//! Reductions from planted clique with a known partition to PDS*, the
//! imbalanced SBM, Gaussian biclustering and biased sparse PCA.

mod gaussian;
mod params;
mod partite;
mod pipeline;
mod rotation;

pub use gaussian::{
    bc_kernel_budget, bc_mean, bc_recovery_map, lift_pc_nonhomogeneous, random_rotation_to_bspca, ROTATION_BUDGET,
};
pub use params::{
    default_kernel_budget, derive_isbm_params, derive_pds_star_params, signal_bound, target_size,
    PdsStarReductionParams, ReductionParams, TargetModel,
};
pub use partite::{to_k_partite_submatrix, BitMatrix, PartiteSubmatrix};
pub use pipeline::{
    reduce_kpc_to_isbm, reduce_kpc_to_pds_star, PreparedReduction, ReductionTrace, StageRecord, DESIGN_ATTEMPTS,
};
pub use rotation::{bernoulli_rotate_block, RotationDesign, RotationOptions};
