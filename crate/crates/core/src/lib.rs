//! Stabilized three-field (displacement, Darcy flux, pore pressure) finite
//! element solver for the 2D quasi-static Biot model, with a FETI-DP
//! domain-decomposition solver and a Dirichlet preconditioner.
//!
//! The crate is organised bottom-up:
//!
//! - [`mesh`]: structured triangulations of the unit square, box partitions
//!   into subdomains and the interior / dual / primal dof classification.
//! - [`linalg`]: CSR matrices, a sparse direct factorization for symmetric
//!   indefinite systems and a preconditioned conjugate gradient driver.
//! - [`assembly`]: element matrices, the symmetric twofold saddle-point
//!   system of one backward-Euler step, the manufactured test solution and
//!   error norms.
//! - [`fetidp`]: subdomain elimination, coarse problem, jump operators, the
//!   Dirichlet preconditioner and full-field recovery.
//! - [`driver`]: time stepping and the experiment modes behind the CLI.

pub mod assembly;
pub mod driver;
pub mod error;
pub mod fetidp;
pub mod linalg;
pub mod mesh;

pub use error::{Error, Result};
