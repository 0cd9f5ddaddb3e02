use faer::dyn_stack::{MemBuffer, MemStack};
use faer::linalg::solvers::Solve;
use faer::perm::PermRef;
use faer::sparse::linalg::cholesky::{
    factorize_symbolic_cholesky, CholeskySymbolicParams, IntranodeLbltRef, SymbolicCholesky, SymmetricOrdering,
};
use faer::sparse::linalg::solvers::{Lu, SymbolicLu};
use faer::sparse::linalg::SupernodalThreshold;
use faer::sparse::{SparseColMat, Triplet};
use faer::{Conj, MatMut, Par, Side};

use crate::error::{invalid, Error, Result};
use crate::linalg::{DenseMatrix, SparseMatrix};

/// Counts of positive, negative and zero eigenvalues.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Inertia {
    pub positive: usize,
    pub negative: usize,
    pub zero: usize,
}

/// Matrices up to this size get their inertia computed at factorization.
pub const INERTIA_LIMIT: usize = 600;

/// Probe backward error above which a factorization is treated as singular.
const PROBE_BACKWARD_TOL: f64 = 1e-8;
/// Probe backward error above which the LBLᵀ factor is replaced by an LU.
/// Pivoting confined to supernodes can let entries grow; LU with partial
/// pivoting reaches round-off on the same matrices.
const PROBE_LBLT_BACKWARD_TOL: f64 = 1e-14;
/// Probe forward error above which a factorization is treated as singular.
/// A rank-deficient matrix factored with a round-off pivot leaves an O(1)
/// null-space component in the probe solution.
const PROBE_FORWARD_TOL: f64 = 1e-3;

/// Reusable direct factorization of a symmetric (possibly indefinite)
/// sparse matrix.
///
/// Works on the symmetrically equilibrated matrix `S A S` with
/// `S = diag(1/√max_j |a_ij|)`. The first choice is a supernodal LBLᵀ with
/// an AMD ordering and Bunch-Kaufman pivoting inside supernodes; when its
/// probe solve fails the matrix is refactored by a sparse LU with partial
/// pivoting. Numerical rank deficiency is detected by a probe solve against a
/// known right-hand side.
pub struct Factorization {
    n: usize,
    backend: Backend,
    scale: Vec<f64>,
    inertia: Option<Inertia>,
}

enum Backend {
    Empty,
    Lblt {
        symbolic: SymbolicCholesky<usize>,
        values: Vec<f64>,
        subdiag: Vec<f64>,
        fwd: Vec<usize>,
        inv: Vec<usize>,
    },
    Lu(Lu<usize, f64>),
}

impl Backend {
    fn lblt(lower: &SparseColMat<usize, f64>) -> Result<Backend> {
        let n = lower.nrows();
        let symbolic = factorize_symbolic_cholesky(
            lower.symbolic(),
            Side::Lower,
            SymmetricOrdering::Amd,
            CholeskySymbolicParams {
                supernodal_flop_ratio_threshold: SupernodalThreshold::FORCE_SUPERNODAL,
                ..Default::default()
            },
        )
        .map_err(|e| Error::Backend(format!("{e:?}")))?;
        let mut values = vec![0.0; symbolic.len_val()];
        let mut subdiag = vec![0.0; n];
        let mut fwd = vec![0usize; n];
        let mut inv = vec![0usize; n];
        let mut mem = MemBuffer::try_new(
            symbolic.factorize_numeric_intranode_lblt_scratch::<f64>(Par::Seq, Default::default()),
        )
        .map_err(|e| Error::Backend(format!("{e:?}")))?;
        symbolic.factorize_numeric_intranode_lblt(
            &mut values,
            &mut subdiag,
            &mut fwd,
            &mut inv,
            lower.as_ref(),
            Side::Lower,
            Par::Seq,
            MemStack::new(&mut mem),
            Default::default(),
        );
        Ok(Backend::Lblt {
            symbolic,
            values,
            subdiag,
            fwd,
            inv,
        })
    }

    fn lu(full: &SparseColMat<usize, f64>) -> Result<Backend> {
        let n = full.nrows();
        let symbolic = SymbolicLu::try_new(full.symbolic()).map_err(|e| Error::Backend(format!("{e:?}")))?;
        let lu = Lu::try_new_with_symbolic(symbolic, full.as_ref()).map_err(|e| match e {
            faer::sparse::linalg::LuError::SymbolicSingular { index } => Error::SingularMatrix {
                n,
                evidence: format!("structurally rank deficient at pivot {index}"),
            },
            other => Error::Backend(format!("{other:?}")),
        })?;
        Ok(Backend::Lu(lu))
    }

    fn solve(&self, b: MatMut<'_, f64>) {
        match self {
            Backend::Empty => {}
            Backend::Lblt {
                symbolic,
                values,
                subdiag,
                fwd,
                inv,
            } => {
                let n = fwd.len();
                let perm = PermRef::new_checked(fwd, inv, n);
                let lblt = IntranodeLbltRef::new(symbolic, values, subdiag, perm);
                let mut mem = MemBuffer::new(symbolic.solve_in_place_scratch::<f64>(b.ncols(), Par::Seq));
                lblt.solve_in_place_with_conj(Conj::No, b, Par::Seq, MemStack::new(&mut mem));
            }
            Backend::Lu(lu) => lu.solve_in_place(b),
        }
    }
}

impl std::fmt::Debug for Factorization {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Factorization")
            .field("n", &self.n)
            .field("inertia", &self.inertia)
            .finish_non_exhaustive()
    }
}

fn equilibration(a: &SparseMatrix) -> Vec<f64> {
    (0..a.n_rows())
        .map(|i| {
            let m = a.row(i).fold(0.0f64, |m, (_, v)| m.max(v.abs()));
            if m > 0.0 && m.is_finite() {
                1.0 / m.sqrt()
            } else {
                1.0
            }
        })
        .collect()
}

fn to_faer(a: &SparseMatrix, scale: &[f64], lower: bool) -> Result<SparseColMat<usize, f64>> {
    let t: Vec<_> = a
        .triplets()
        .filter(|&(i, j, _)| !lower || i >= j)
        .map(|(i, j, v)| Triplet::new(i, j, scale[i] * v * scale[j]))
        .collect();
    SparseColMat::try_new_from_triplets(a.n_rows(), a.n_cols(), &t)
        .map_err(|e| Error::Backend(format!("{e:?}")))
}

fn dense_inertia(a: &SparseMatrix) -> Option<Inertia> {
    let n = a.n_rows();
    let mut m = faer::Mat::<f64>::zeros(n, n);
    for (i, j, v) in a.triplets() {
        m[(i, j)] = v;
    }
    let eig = m.self_adjoint_eigenvalues(Side::Lower).ok()?;
    let scale = eig.iter().fold(0.0f64, |s, v| s.max(v.abs()));
    let tol = scale * n as f64 * f64::EPSILON * 10.0;
    let mut inertia = Inertia {
        positive: 0,
        negative: 0,
        zero: 0,
    };
    for v in eig {
        if v > tol {
            inertia.positive += 1;
        } else if v < -tol {
            inertia.negative += 1;
        } else {
            inertia.zero += 1;
        }
    }
    Some(inertia)
}

pub fn factorize_symmetric_indefinite(a: &SparseMatrix) -> Result<Factorization> {
    let n = a.n_rows();
    if a.n_cols() != n {
        return Err(invalid(format!(
            "cannot factorize a {}x{} matrix",
            n,
            a.n_cols()
        )));
    }
    if !a.is_structurally_symmetric() {
        return Err(invalid("matrix is not structurally symmetric"));
    }
    let inertia = (n <= INERTIA_LIMIT).then(|| dense_inertia(a)).flatten();
    if n == 0 {
        return Ok(Factorization {
            n,
            backend: Backend::Empty,
            scale: Vec::new(),
            inertia,
        });
    }

    let scale = equilibration(a);
    let mut f = Factorization {
        n,
        backend: Backend::lblt(&to_faer(a, &scale, true)?)?,
        scale,
        inertia,
    };
    if probe(a, &f, PROBE_LBLT_BACKWARD_TOL).is_ok() {
        return Ok(f);
    }
    f.backend = Backend::lu(&to_faer(a, &f.scale, false)?)?;
    match probe(a, &f, PROBE_BACKWARD_TOL) {
        Ok(()) => Ok(f),
        Err((backward, forward)) => Err(Error::SingularMatrix {
            n,
            evidence: match inertia {
                Some(i) if i.zero > 0 => format!("{} zero eigenvalues", i.zero),
                _ => format!("probe solve backward error {backward:.3e}, forward error {forward:.3e}"),
            },
        }),
    }
}

/// Solves the equilibrated system against a fixed alternating vector and
/// returns the backward and forward errors on failure.
fn probe(a: &SparseMatrix, f: &Factorization, backward_tol: f64) -> std::result::Result<(), (f64, f64)> {
    let n = f.n;
    let x: Vec<f64> = (0..n)
        .map(|i| if i % 2 == 0 { 1.0 } else { -0.5 } / (1.0 + (i % 7) as f64))
        .collect();
    let scaled = |v: &[f64]| -> Vec<f64> { v.iter().zip(&f.scale).map(|(v, s)| v * s).collect() };
    let b = scaled(&a.mul_vec(&scaled(&x)));
    let mut y = b.clone();
    f.backend.solve(MatMut::from_column_major_slice_mut(&mut y, n, 1));
    let res = scaled(&a.mul_vec(&scaled(&y)));
    let a_max = a
        .triplets()
        .fold(0.0f64, |m, (i, j, v)| m.max((f.scale[i] * v * f.scale[j]).abs()));
    let rnorm = res
        .iter()
        .zip(&b)
        .map(|(r, b)| (r - b).abs())
        .fold(0.0f64, f64::max);
    let ynorm = y.iter().fold(0.0f64, |s, v| s.max(v.abs()));
    let bnorm = b.iter().fold(0.0f64, |s, v| s.max(v.abs()));
    let backward = rnorm / (a_max * ynorm + bnorm);
    let forward = x
        .iter()
        .zip(&y)
        .map(|(x, y)| (x - y).abs())
        .fold(0.0f64, f64::max);
    let finite = y.iter().all(|v| v.is_finite());
    if finite && backward <= backward_tol && forward <= PROBE_FORWARD_TOL {
        Ok(())
    } else {
        Err((backward, forward))
    }
}

impl Factorization {
    pub fn dim(&self) -> usize {
        self.n
    }

    /// Inertia, if the matrix was small enough to compute it.
    pub fn inertia(&self) -> Option<Inertia> {
        self.inertia
    }

    pub fn solve_in_place(&self, b: &mut [f64]) {
        assert_eq!(b.len(), self.n, "solve: rhs has wrong length");
        for (v, s) in b.iter_mut().zip(&self.scale) {
            *v *= s;
        }
        self.backend.solve(MatMut::from_column_major_slice_mut(b, self.n, 1));
        for (v, s) in b.iter_mut().zip(&self.scale) {
            *v *= s;
        }
    }

    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let mut x = b.to_vec();
        self.solve_in_place(&mut x);
        x
    }

    /// Solve followed by `steps` rounds of iterative refinement against `a`,
    /// the matrix this factorization was computed from.
    pub fn solve_refined(&self, a: &SparseMatrix, b: &[f64], steps: usize) -> Vec<f64> {
        let mut x = self.solve(b);
        for _ in 0..steps {
            let mut r = b.to_vec();
            a.mul_vec_add(-1.0, &x, &mut r);
            self.solve_in_place(&mut r);
            for (x, r) in x.iter_mut().zip(&r) {
                *x += r;
            }
        }
        x
    }

    /// Solves for every column of `b` in place.
    pub fn solve_dense_in_place(&self, b: &mut DenseMatrix) {
        assert_eq!(b.rows(), self.n, "solve: rhs has wrong row count");
        let cols = b.cols();
        if cols > 0 {
            for j in 0..cols {
                for (v, s) in b.col_mut(j).iter_mut().zip(&self.scale) {
                    *v *= s;
                }
            }
            self.backend
                .solve(MatMut::from_column_major_slice_mut(b.data_mut(), self.n, cols));
            for j in 0..cols {
                for (v, s) in b.col_mut(j).iter_mut().zip(&self.scale) {
                    *v *= s;
                }
            }
        }
    }
}
