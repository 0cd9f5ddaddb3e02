//! Dual-primal tearing and interconnecting for the stabilized Biot system.
//!
//! Nodal dofs at subdomain cross points stay continuous (primal) together
//! with one constant pressure per subdomain. The remaining interface dofs are
//! torn (dual) and glued by Lagrange multipliers, which solve the symmetric
//! positive definite system
//!
//! ```text
//! B_Δ S̃⁻¹ B_Δᵀ λ = B_Δ S̃⁻¹ f*_Δ
//! ```
//!
//! by PCG with the multiplicity-scaled Dirichlet preconditioner.

mod basis;
mod jump;
mod local;
mod operator;

pub use jump::JumpOperator;
pub use operator::{
    build_fetidp, FetidpOperator, FetidpSizes, FetidpSolution, Preconditioner, CONTINUITY_TOL,
};
