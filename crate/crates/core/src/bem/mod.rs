//! Boundary-element discretization: RWG/pulse bases, triangle quadrature,
//! singular integrals and matrix assembly.

mod assembly;
mod basis;
mod kernel;
mod quadrature;
mod singular;

pub use assembly::{
    assemble_aefie, assemble_efie, assemble_gradient, assemble_p, assemble_s_direct, assemble_system,
    assemble_v, assemble_vp, assemble_vp_gradient, gradient_from_blocks, s_from_p, system_from_blocks,
    AssemblyOptions, ChargeGauge, Formulation, GradientMatrix, NearFieldPlan, Problem, SystemMatrix,
};
pub use basis::{build_basis, HalfBasis, RwgBasis, RwgEdge};
pub use kernel::kernel_g;
pub use quadrature::TriangleRule;
pub use singular::static_singular_integral;
