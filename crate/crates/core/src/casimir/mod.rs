//! Casimir energy and force from normalized log-determinants integrated over
//! imaginary wavenumber.
//!
//! `E = (ħc/2π) ∫₀^∞ dκ ln det Z(κ)/det Z∞(κ)` and
//! `F = −(ħc/2π) ∫₀^∞ dκ tr(Z⁻¹ ∂Z)`, where `Z∞` keeps only the self blocks of
//! every object (the infinite-separation limit).

mod breakdown;
mod engine;
mod quadrature;

pub use breakdown::{breakdown_experiment, full_breakdown, BreakdownRow, REFERENCE_FLOOR};
pub use engine::{
    default_direction, energy_integrand, force_integrand, integrate_energy, integrate_force, sample_node,
    CasimirResult, Engine, EngineOptions, Evaluation, ForceSpec, NodeSample,
};
pub use quadrature::{build_kappa_grid, KappaQuadrature};

use crate::bem::SystemMatrix;
use crate::Real;

/// `Z∞`: the system with every cross-object entry removed.
pub fn normalization_matrix<T: Real>(z: &SystemMatrix<T>) -> SystemMatrix<T> {
    z.normalized()
}

/// Default κ-map scale `1/(2·gap)`.
pub fn default_kappa0(gap: f64) -> f64 {
    0.5 / gap
}
