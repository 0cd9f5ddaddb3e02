//! Sparse storage, direct factorization and Krylov iteration.

mod dense;
mod factor;
mod matrix_market;
pub mod pcg;
mod sparse;

pub use dense::{axpy, dot, norm2, DenseMatrix};
pub use factor::{factorize_symmetric_indefinite, Factorization, Inertia, INERTIA_LIMIT};
pub use matrix_market::{read_matrix_market, write_matrix_market};
pub use pcg::{pcg, Lanczos, PcgOptions, PcgReport};
pub use sparse::{csr_from_triplets, SparseMatrix, SYMMETRY_TOL};
