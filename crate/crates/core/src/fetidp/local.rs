//! Subdomain blocks in the split pressure basis.
//!
//! Local unknowns are `I, Δ, Π, q, p0, μ`: interior, dual and primal nodal
//! dofs, element pressures `q` with zero area-weighted mean, the subdomain
//! constant pressure `p0` (so p = q + p0) and the multiplier `μ` enforcing
//! the zero mean of `q`.

use std::sync::OnceLock;

use crate::assembly::LocalSystem;
use crate::error::{Error, Result};
use crate::linalg::{csr_from_triplets, factorize_symmetric_indefinite, DenseMatrix, Factorization, SparseMatrix};
use crate::mesh::SubdomainDofs;

pub(crate) struct Sizes {
    pub interior: usize,
    pub dual: usize,
    pub primal: usize,
    pub pressure: usize,
}

/// Interior nodal block for the literal A-only harmonic extension.
pub(crate) struct AOnly {
    pub k_ii: Factorization,
    pub k_id: SparseMatrix,
    pub k_dd: SparseMatrix,
}

/// Elimination data for the inner problem with prescribed dual values.
pub(crate) struct Inner {
    /// K_ηη⁻¹ K_ηc.
    pub w: DenseMatrix,
    pub schur: DenseMatrix,
}

pub(crate) struct LocalProblem {
    pub sub: usize,
    pub dofs: Vec<usize>,
    pub sizes: Sizes,
    /// Local coarse index → global coarse index for `Π, p0`.
    pub coarse_map: Vec<usize>,
    pub k_rr: Factorization,
    pub k_rc: SparseMatrix,
    /// K_rr⁻¹ K_rc.
    pub z: DenseMatrix,
    /// K_cc − K_cr K_rr⁻¹ K_rc.
    pub schur: DenseMatrix,
    pub k_eta: Factorization,
    pub k_eta_d: SparseMatrix,
    pub k_eta_c: SparseMatrix,
    pub k_dd: SparseMatrix,
    pub k_dc: SparseMatrix,
    k_cc: DenseMatrix,
    ext: SparseMatrix,
    a_only: OnceLock<std::result::Result<AOnly, String>>,
    inner: OnceLock<std::result::Result<Inner, String>>,
}

fn singular(sub: usize) -> impl Fn(Error) -> Error {
    move |e| Error::SingularSubdomain {
        subdomain: sub,
        source: Box::new(e),
    }
}

/// `K_rc` columns as a dense block and `K_rr⁻¹` applied to them.
fn eliminate(f: &Factorization, k_rc: &SparseMatrix) -> DenseMatrix {
    let mut z = DenseMatrix::zeros(k_rc.n_rows(), k_rc.n_cols());
    for (i, j, v) in k_rc.triplets() {
        z[(i, j)] = v;
    }
    f.solve_dense_in_place(&mut z);
    z
}

/// `K_cc − K_rcᵀ Z`, symmetrized.
fn schur_block(k_cc: &DenseMatrix, k_rc: &SparseMatrix, z: &DenseMatrix) -> DenseMatrix {
    let nc = k_cc.cols();
    let mut s = k_cc.clone();
    let mut col = vec![0.0; nc];
    for j in 0..nc {
        col.fill(0.0);
        k_rc.mul_transpose_vec_add(1.0, z.col(j), &mut col);
        for i in 0..nc {
            s[(i, j)] -= col[i];
        }
    }
    for i in 0..nc {
        for j in 0..i {
            let a = 0.5 * (s[(i, j)] + s[(j, i)]);
            s[(i, j)] = a;
            s[(j, i)] = a;
        }
    }
    s
}

fn dense(a: &SparseMatrix) -> DenseMatrix {
    let mut d = DenseMatrix::zeros(a.n_rows(), a.n_cols());
    for (i, j, v) in a.triplets() {
        d[(i, j)] = v;
    }
    d
}

impl LocalProblem {
    pub fn new(
        local: &LocalSystem,
        sd: &SubdomainDofs,
        areas: &[f64],
        n_primal: usize,
    ) -> Result<Self> {
        let sub = local.subdomain;
        let sizes = Sizes {
            interior: sd.interior.len(),
            dual: sd.dual.len(),
            primal: sd.primal.len(),
            pressure: sd.pressures.len(),
        };
        let n = local.matrix.n_rows();
        if n != sd.free_len() || local.dofs.len() != n {
            return Err(Error::DimensionMismatch {
                expected: sd.free_len(),
                actual: n,
            });
        }
        let p_start = sizes.interior + sizes.dual + sizes.primal;
        let (p0, mu) = (n, n + 1);

        let mut t: Vec<(usize, usize, f64)> = Vec::with_capacity(local.matrix.nnz() * 2);
        for (i, j, v) in local.matrix.triplets() {
            t.push((i, j, v));
            let (ip, jp) = (i >= p_start, j >= p_start);
            if jp {
                t.push((i, p0, v));
            }
            if ip {
                t.push((p0, j, v));
            }
            if ip && jp {
                t.push((p0, p0, v));
            }
        }
        for (k, &a) in areas.iter().enumerate() {
            t.push((mu, p_start + k, a));
            t.push((p_start + k, mu, a));
        }
        let ext = csr_from_triplets(n + 2, n + 2, &t)?;

        let interior: Vec<usize> = (0..sizes.interior).collect();
        let dual: Vec<usize> = (sizes.interior..sizes.interior + sizes.dual).collect();
        let primal: Vec<usize> = (sizes.interior + sizes.dual..p_start).collect();
        let q: Vec<usize> = (p_start..n).collect();
        let r: Vec<usize> = interior.iter().chain(&dual).chain(&q).copied().chain([mu]).collect();
        let c: Vec<usize> = primal.iter().copied().chain([p0]).collect();
        let eta: Vec<usize> = interior.iter().chain(&q).copied().chain([mu]).collect();

        let k_rr = factorize_symmetric_indefinite(&ext.submatrix(&r, &r)).map_err(singular(sub))?;
        let k_rc = ext.submatrix(&r, &c);
        let k_cc = dense(&ext.submatrix(&c, &c));
        let z = eliminate(&k_rr, &k_rc);
        let schur = schur_block(&k_cc, &k_rc, &z);
        let k_eta = factorize_symmetric_indefinite(&ext.submatrix(&eta, &eta)).map_err(singular(sub))?;

        let mut coarse_map = sd.primal_coarse.clone();
        coarse_map.push(n_primal + sub);
        Ok(LocalProblem {
            sub,
            dofs: local.dofs.clone(),
            k_eta_d: ext.submatrix(&eta, &dual),
            k_eta_c: ext.submatrix(&eta, &c),
            k_dd: ext.submatrix(&dual, &dual),
            k_dc: ext.submatrix(&dual, &c),
            sizes,
            coarse_map,
            k_rr,
            k_rc,
            z,
            schur,
            k_eta,
            k_cc,
            ext,
            a_only: OnceLock::new(),
            inner: OnceLock::new(),
        })
    }

    pub fn n_r(&self) -> usize {
        self.sizes.interior + self.sizes.dual + self.sizes.pressure + 1
    }

    pub fn n_eta(&self) -> usize {
        self.sizes.interior + self.sizes.pressure + 1
    }

    /// Position of the dual block inside an r-vector.
    pub fn dual_in_r(&self) -> std::ops::Range<usize> {
        self.sizes.interior..self.sizes.interior + self.sizes.dual
    }

    /// Splits a local free-ordered vector into its r and c parts in the
    /// transformed basis.
    pub fn split_rhs(&self, f: &[f64]) -> (Vec<f64>, Vec<f64>) {
        let s = &self.sizes;
        let p_start = s.interior + s.dual + s.primal;
        let mut r = Vec::with_capacity(self.n_r());
        r.extend_from_slice(&f[..s.interior + s.dual]);
        r.extend_from_slice(&f[p_start..]);
        r.push(0.0);
        let mut c = f[s.interior + s.dual..p_start].to_vec();
        c.push(f[p_start..].iter().sum());
        (r, c)
    }

    pub fn a_only(&self) -> Result<&AOnly> {
        self.a_only
            .get_or_init(|| {
                let s = &self.sizes;
                let i: Vec<usize> = (0..s.interior).collect();
                let d: Vec<usize> = (s.interior..s.interior + s.dual).collect();
                let k_ii = factorize_symmetric_indefinite(&self.ext.submatrix(&i, &i))
                    .map_err(|e| singular(self.sub)(e).to_string())?;
                Ok(AOnly {
                    k_ii,
                    k_id: self.ext.submatrix(&i, &d),
                    k_dd: self.ext.submatrix(&d, &d),
                })
            })
            .as_ref()
            .map_err(|e| Error::Consistency(e.clone()))
    }

    pub fn inner(&self) -> Result<&Inner> {
        self.inner
            .get_or_init(|| {
                let w = eliminate(&self.k_eta, &self.k_eta_c);
                Ok(Inner {
                    schur: schur_block(&self.k_cc, &self.k_eta_c, &w),
                    w,
                })
            })
            .as_ref()
            .map_err(|e: &String| Error::Consistency(e.clone()))
    }

    /// H_i w = K_ΔΔ w − K_Δη K_ηη⁻¹ K_ηΔ w.
    pub fn harmonic_schur(&self, w: &[f64]) -> Vec<f64> {
        let mut y = self.k_dd.mul_vec(w);
        if self.n_eta() > 0 {
            let mut t = self.k_eta_d.mul_vec(w);
            self.k_eta.solve_in_place(&mut t);
            self.k_eta_d.mul_transpose_vec_add(-1.0, &t, &mut y);
        }
        y
    }

    /// A_ΔΔ w − A_ΔI A_II⁻¹ A_IΔ w.
    pub fn harmonic_schur_a_only(&self, w: &[f64]) -> Result<Vec<f64>> {
        let a = self.a_only()?;
        let mut y = a.k_dd.mul_vec(w);
        if self.sizes.interior > 0 {
            let mut t = a.k_id.mul_vec(w);
            a.k_ii.solve_in_place(&mut t);
            a.k_id.mul_transpose_vec_add(-1.0, &t, &mut y);
        }
        Ok(y)
    }
}

pub(crate) fn to_dense_rows(d: &DenseMatrix) -> Vec<Vec<f64>> {
    (0..d.rows()).map(|i| (0..d.cols()).map(|j| d[(i, j)]).collect()).collect()
}
