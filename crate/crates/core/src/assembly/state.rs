use crate::assembly::ExactSolution;
use crate::error::{Error, Result};
use crate::mesh::{DofMap, Mesh, NODE_DOFS, UX, UY, ZX, ZY};

/// Discrete `(u, z, p)` over every global dof, constrained ones included.
#[derive(Debug, Clone, PartialEq)]
pub struct FieldState {
    node_count: usize,
    values: Vec<f64>,
}

impl FieldState {
    pub fn zeros(dofmap: &DofMap) -> Self {
        FieldState {
            node_count: dofmap.node_count(),
            values: vec![0.0; dofmap.total_dofs()],
        }
    }

    /// Nodal interpolant of the exact fields; pressures take centroid values.
    pub fn interpolate(mesh: &Mesh, dofmap: &DofMap, exact: &ExactSolution, t: f64) -> Self {
        let mut s = Self::zeros(dofmap);
        for (n, &[x, y]) in mesh.nodes().iter().enumerate() {
            let f = exact.eval(x, y, t);
            s.values[NODE_DOFS * n + UX] = f.u[0];
            s.values[NODE_DOFS * n + UY] = f.u[1];
            s.values[NODE_DOFS * n + ZX] = f.z[0];
            s.values[NODE_DOFS * n + ZY] = f.z[1];
        }
        for t_idx in 0..mesh.triangle_count() {
            let v = mesh.triangle_vertices(t_idx);
            let cx = (v[0][0] + v[1][0] + v[2][0]) / 3.0;
            let cy = (v[0][1] + v[1][1] + v[2][1]) / 3.0;
            s.values[dofmap.pressure_dof(t_idx)] = exact.eval(cx, cy, t).p;
        }
        s
    }

    /// Combines a solution on the free dofs with prescribed values on the
    /// constrained ones (`dirichlet` lists `(dof, value)`).
    pub fn from_free(dofmap: &DofMap, free: &[f64], dirichlet: &[(usize, f64)]) -> Result<Self> {
        if free.len() != dofmap.free_len() {
            return Err(Error::DimensionMismatch {
                expected: dofmap.free_len(),
                actual: free.len(),
            });
        }
        let mut s = Self::zeros(dofmap);
        for (&dof, &v) in dofmap.free_dofs().iter().zip(free) {
            s.values[dof] = v;
        }
        for &(dof, v) in dirichlet {
            s.values[dof] = v;
        }
        Ok(s)
    }

    pub fn from_values(dofmap: &DofMap, values: Vec<f64>) -> Result<Self> {
        if values.len() != dofmap.total_dofs() {
            return Err(Error::DimensionMismatch {
                expected: dofmap.total_dofs(),
                actual: values.len(),
            });
        }
        Ok(FieldState {
            node_count: dofmap.node_count(),
            values,
        })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn u(&self, node: usize) -> [f64; 2] {
        [self.values[NODE_DOFS * node + UX], self.values[NODE_DOFS * node + UY]]
    }

    pub fn z(&self, node: usize) -> [f64; 2] {
        [self.values[NODE_DOFS * node + ZX], self.values[NODE_DOFS * node + ZY]]
    }

    pub fn p(&self, triangle: usize) -> f64 {
        self.values[NODE_DOFS * self.node_count + triangle]
    }

    pub fn pressures(&self) -> &[f64] {
        &self.values[NODE_DOFS * self.node_count..]
    }

    /// Restriction to the free dofs, in the free ordering.
    pub fn free_values(&self, dofmap: &DofMap) -> Vec<f64> {
        dofmap.free_dofs().iter().map(|&d| self.values[d]).collect()
    }
}

impl FieldState {
    pub(crate) fn from_raw(node_count: usize, values: Vec<f64>) -> Self {
        FieldState { node_count, values }
    }
}
