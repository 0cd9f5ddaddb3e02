//! Discrete Biot system: element matrices, the symmetric block system of a
//! time step, the manufactured test solution and error norms.

mod element;
mod exact;
mod norms;
mod params;
mod state;
mod system;

pub use element::{
    darcy_element_matrix, div_coupling_row, elasticity_element_matrix, ElementMatrix,
    TriangleGeometry,
};
pub use exact::{exact_solution_eval, manufactured_source_g1, ExactSolution, FieldValues};
pub use norms::{difference_norms, error_norms, field_norms, mean_pressure, FieldNorms, QUADRATURE_7};
pub use params::ModelParams;
pub use state::FieldState;
pub use system::{
    assemble_rhs, assemble_system_matrices, assemble_time_step_system, dirichlet_values,
    solve_direct, stabilization_matrix, BlockSystem, LocalSystem, SystemMatrices, SystemRhs, TimeStepScaling,
};
