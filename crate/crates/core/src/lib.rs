//! Casimir energies and forces between perfectly conducting bodies.
//!
//! The solver discretizes each body with RWG current and pulse charge bases,
//! assembles the imaginary-frequency EFIE or augmented EFIE (A-EFIE) system,
//! and integrates the log-determinant ratio `ln det Z(κ) / det Z∞(κ)` over
//! κ ∈ (0, ∞). Forces use the trace identity `∂ ln det Z = tr(Z⁻¹ ∂Z)`.
//!
//! All lengths are dimensionless in a user scale `L`; energies are reported in
//! units of `ħc/L` and forces in `ħc/L²`.
//!
//! Module map:
//! - [`geometry`]: triangle-mesh scenes, generators, OFF I/O.
//! - [`bem`]: bases, quadrature, singular integrals, matrix assembly.
//! - [`spectral`]: LU log-determinants, traces, condition estimates.
//! - [`casimir`]: κ quadrature, normalization, energy/force integrals.

// `!(x > 0.0)` style guards are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bem;
pub mod casimir;
pub mod error;
pub mod geometry;
mod par;
pub mod precision;
pub mod spectral;

pub use error::{Error, Result};
pub use precision::{Precision, Real};

/// Common imports for driving the solver.
pub mod prelude {
    pub use crate::bem::{
        assemble_aefie, assemble_efie, assemble_gradient, build_basis, AssemblyOptions,
        ChargeGauge, Formulation, GradientMatrix, NearFieldPlan, Problem, RwgBasis, SystemMatrix,
    };
    pub use crate::casimir::{
        breakdown_experiment, build_kappa_grid, integrate_energy, integrate_force, CasimirResult,
        Engine, EngineOptions, Evaluation, KappaQuadrature,
    };
    pub use crate::geometry::{
        capsule_pair, generate_capsule, generate_plate, generate_sphere, sphere_pair, TriScene,
    };
    pub use crate::{Error, Precision, Real, Result};
}
