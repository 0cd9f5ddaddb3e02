use crate::error::{invalid, Result};
use crate::linalg::{csr_from_triplets, SparseMatrix};
use crate::mesh::DofMap;

/// Signed incidence between subdomain copies of dual dofs and Lagrange
/// multipliers.
///
/// The dual space is the concatenation over subdomains of their local dual
/// dofs. Multiplier `k` belongs to global dual dof `k` and carries `+1` on the
/// copy in the lower-numbered subdomain and `−1` on the other.
#[derive(Debug, Clone, PartialEq)]
pub struct JumpOperator {
    multipliers: usize,
    offsets: Vec<usize>,
    /// `(multiplier, sign)` per dual-space position.
    entries: Vec<(usize, f64)>,
    /// 1/N_x per dual-space position.
    scaling: Vec<f64>,
}

impl JumpOperator {
    pub fn new(dofmap: &DofMap) -> Result<Self> {
        let mut index = vec![usize::MAX; dofmap.total_dofs()];
        for (k, &d) in dofmap.dual_dofs().iter().enumerate() {
            index[d] = k;
        }
        let mut offsets = vec![0];
        let mut entries = Vec::new();
        let mut scaling = Vec::new();
        for (sub, sd) in dofmap.subdomains().iter().enumerate() {
            for &d in &sd.dual {
                let k = index[d];
                if k == usize::MAX {
                    return Err(invalid(format!("dof {d} of subdomain {sub} is not dual")));
                }
                let [lo, hi] = dofmap.dual_subdomains()[k];
                let sign = if sub == lo {
                    1.0
                } else if sub == hi {
                    -1.0
                } else {
                    return Err(invalid(format!("dual dof {d} not shared by subdomain {sub}")));
                };
                entries.push((k, sign));
                scaling.push(1.0 / dofmap.multiplicity(d) as f64);
            }
            offsets.push(entries.len());
        }
        if entries.len() != 2 * dofmap.dual_dofs().len() {
            return Err(invalid("every dual dof must have exactly two copies"));
        }
        Ok(JumpOperator {
            multipliers: dofmap.dual_dofs().len(),
            offsets,
            entries,
            scaling,
        })
    }

    pub fn multiplier_count(&self) -> usize {
        self.multipliers
    }

    pub fn dual_space_len(&self) -> usize {
        self.entries.len()
    }

    /// Positions of a subdomain's dual dofs in the dual space.
    pub fn range(&self, sub: usize) -> std::ops::Range<usize> {
        self.offsets[sub]..self.offsets[sub + 1]
    }

    /// B_Δ u.
    pub fn apply(&self, u: &[f64]) -> Vec<f64> {
        assert_eq!(u.len(), self.entries.len(), "jump: wrong dual-space length");
        let mut out = vec![0.0; self.multipliers];
        for (&(k, s), &v) in self.entries.iter().zip(u) {
            out[k] += s * v;
        }
        out
    }

    /// B_Δᵀ λ.
    pub fn apply_transpose(&self, lambda: &[f64]) -> Vec<f64> {
        assert_eq!(lambda.len(), self.multipliers, "jump: wrong multiplier length");
        self.entries.iter().map(|&(k, s)| s * lambda[k]).collect()
    }

    /// B_{Δ,D} u with D = diag(1/N_x).
    pub fn apply_scaled(&self, u: &[f64]) -> Vec<f64> {
        let du: Vec<f64> = u.iter().zip(&self.scaling).map(|(a, d)| a * d).collect();
        self.apply(&du)
    }

    /// B_{Δ,D}ᵀ λ.
    pub fn apply_scaled_transpose(&self, lambda: &[f64]) -> Vec<f64> {
        let mut v = self.apply_transpose(lambda);
        for (a, d) in v.iter_mut().zip(&self.scaling) {
            *a *= d;
        }
        v
    }

    pub fn scaling(&self) -> &[f64] {
        &self.scaling
    }

    pub fn to_sparse(&self) -> SparseMatrix {
        let t: Vec<_> = self
            .entries
            .iter()
            .enumerate()
            .map(|(j, &(k, s))| (k, j, s))
            .collect();
        csr_from_triplets(self.multipliers, self.entries.len(), &t).expect("indices in range")
    }
}
