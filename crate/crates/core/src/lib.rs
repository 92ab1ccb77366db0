//! Mass transport on weighted graphs whose edge weights evolve with the
//! mass.
//!
//! Vertex masses `ρ` move along edges through a flux `F_ij = Φ(ρ_i m_j,
//! m_i ρ_j; v_ij) η_ij` built from a velocity `v = V_t[ρ]` and weights `η`.
//! The weights relax towards a target `ω_t[ρ]` at a rate set by the
//! [`Regime`]:
//!
//! ```text
//! ∂_t ρ = −∇̄·F        ∂_t η = ω[ρ] − η   (coupled)
//! ```
//!
//! ```
//! use coevolve::{integrate, preset};
//!
//! let scenario = preset("opinion-line-16").unwrap().build().unwrap();
//! let traj = integrate(&scenario.spec, &scenario.rho0, &scenario.eta0, &scenario.integrator).unwrap();
//! assert!(traj.max_mass_drift() < 1e-10);
//! ```

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analysis;
pub mod dynamics;
pub mod error;
pub mod fields;
pub mod flux;
pub mod graph;
pub mod scenario;

pub use analysis::{
    contraction_report, fit_rate, ConstantSet, ContractionReport, ConvergenceStudy, RateFit,
};
pub use dynamics::{
    eta_exact, integrate, picard_solve, rhs, EtaUpdate, IntegratorConfig, PicardConfig, Regime,
    Scheme, SystemSpec,
};
pub use error::{Error, Result};
pub use fields::{eval_omega, eval_velocity, OmegaFunctional, PairKernel, VelocityField};
pub use flux::{
    assemble_flux, check_admissibility, mass_rhs, FluxInterpolation, InterpolationKind,
};
pub use graph::{
    d_infinity, nonlocal_divergence, nonlocal_gradient, tv_norm, EdgeMatrix, MassVector,
    Trajectory, VertexSet, WeightMatrix,
};
pub use scenario::{preset, preset_names, Scenario, ScenarioConfig};
