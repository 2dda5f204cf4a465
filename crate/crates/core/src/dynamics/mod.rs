//! Spectral analysis of the quadratic game and integration of the continuous flow.

mod eigen;
mod flow;
mod spectral;

pub use eigen::{eigenvalues, hessenberg, hqr, spectral_radius, symmetric_eigenvalues, Spectrum, MAX_DIM};
pub use flow::{
    apdg_flow_rhs, integrate_flow, richardson_check, FlowSample, FlowState, FlowTrajectory, RichardsonCheck,
    BLOWUP_NORM, MAX_HORIZON, MAX_STEP,
};
pub use spectral::{
    build_g_nag, build_g_new, build_q, explicit_euler_matrix, explicit_euler_radius, gs_iteration_matrix,
    instability_witness, predicted_instability, spectrum, QuadraticGame,
};
