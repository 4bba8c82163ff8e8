//! Constructive approximate partition of unity from polynomial-weighted
//! Gaussians at scattered nodes.

mod local;
mod refine;
mod theta;

pub use local::{
    q_bound, q_direct, q_form_value, solve_local_system, solve_scaled, solve_scaled_with, LocalSolution, LSTSQ_CUTOFF,
};
pub use refine::{
    build_two_scale, generate_two_scale, refinement_coeffs, GridPoint, Refinement, Region, TwoScaleGrid,
};
pub use theta::{
    assemble_theta, assign_sigma, build_theta, local_basis, saturation_reference, solve_all, theta_scan,
    BuildDiagnostics, PartitionConfig, SigmaAssignment, ThetaEntry, ThetaFunction, ThetaScan,
};
