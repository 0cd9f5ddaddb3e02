//! Change of basis that turns edge averages into primal unknowns.
//!
//! The values `v` of one component on the interior nodes of an interface
//! edge are written as `v = H w` with the Householder reflector `H` mapping
//! `e₀` to `1/√n`. Then `w₀ = √n · mean(v)` and the remaining coordinates
//! carry zero-mean modes. `H` is symmetric and orthogonal, so the same map
//! transforms matrices (`H K H`), right-hand sides and solutions.

use crate::error::Result;
use crate::linalg::{csr_from_triplets, SparseMatrix};

/// Reflector `I − 2 v vᵀ / vᵀv` with `v = e₀ − 1/√n`, as a dense row-major
/// `n×n` array.
pub(crate) fn householder(n: usize) -> Vec<f64> {
    let mut h = vec![0.0; n * n];
    for i in 0..n {
        h[i * n + i] = 1.0;
    }
    if n < 2 {
        return h;
    }
    let s = 1.0 / (n as f64).sqrt();
    let mut v = vec![-s; n];
    v[0] += 1.0;
    let vv: f64 = v.iter().map(|x| x * x).sum();
    for i in 0..n {
        for j in 0..n {
            h[i * n + j] -= 2.0 * v[i] * v[j] / vv;
        }
    }
    h
}

/// Edge groups of one index space (free-global or subdomain-local).
#[derive(Debug, Clone, Default, PartialEq)]
pub(crate) struct EdgeBasis {
    groups: Vec<Vec<usize>>,
    /// Group and position within it of each index, if any.
    member: Vec<Option<(usize, usize)>>,
    reflectors: Vec<Vec<f64>>,
}

impl EdgeBasis {
    /// `groups` index positions in a space of dimension `n`.
    pub fn new(n: usize, groups: Vec<Vec<usize>>) -> Self {
        let mut member = vec![None; n];
        for (g, idx) in groups.iter().enumerate() {
            for (a, &i) in idx.iter().enumerate() {
                member[i] = Some((g, a));
            }
        }
        let reflectors = groups.iter().map(|g| householder(g.len())).collect();
        EdgeBasis {
            groups,
            member,
            reflectors,
        }
    }

    pub fn is_identity(&self) -> bool {
        self.groups.iter().all(|g| g.len() < 2)
    }

    /// `x ← T x`; `T` is its own inverse and transpose.
    pub fn apply(&self, x: &mut [f64]) {
        let mut buf = Vec::new();
        for (idx, h) in self.groups.iter().zip(&self.reflectors) {
            let n = idx.len();
            if n < 2 {
                continue;
            }
            buf.clear();
            buf.extend(idx.iter().map(|&i| x[i]));
            for (a, &i) in idx.iter().enumerate() {
                x[i] = (0..n).map(|b| h[a * n + b] * buf[b]).sum();
            }
        }
    }

    /// `A T` for a square matrix in this index space.
    fn right(&self, a: &SparseMatrix) -> Result<SparseMatrix> {
        let mut t = Vec::with_capacity(a.nnz() * 2);
        for (i, j, v) in a.triplets() {
            match self.member[j] {
                Some((g, b)) if self.groups[g].len() > 1 => {
                    let idx = &self.groups[g];
                    let n = idx.len();
                    let h = &self.reflectors[g];
                    for (c, &jc) in idx.iter().enumerate() {
                        t.push((i, jc, v * h[b * n + c]));
                    }
                }
                _ => t.push((i, j, v)),
            }
        }
        csr_from_triplets(a.n_rows(), a.n_cols(), &t)
    }

    /// `T A T`, symmetrized.
    pub fn transform(&self, a: &SparseMatrix) -> Result<SparseMatrix> {
        if self.is_identity() {
            return Ok(a.clone());
        }
        let at = self.right(a)?;
        let tat = self.right(&at.transpose())?.transpose();
        let tr = tat.transpose();
        let t: Vec<(usize, usize, f64)> = tat
            .triplets()
            .map(|(i, j, v)| (i, j, 0.5 * v))
            .chain(tr.triplets().map(|(i, j, v)| (i, j, 0.5 * v)))
            .collect();
        csr_from_triplets(a.n_rows(), a.n_cols(), &t)
    }
}
