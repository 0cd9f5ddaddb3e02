//! Closed-form element matrices on affine triangles.
//!
//! Local vector dofs are ordered by component, `c*3 + k` for component `c`
//! and vertex `k`.

use crate::error::{invalid, Result};

/// Affine triangle with its barycentric gradients.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TriangleGeometry {
    pub vertices: [[f64; 2]; 3],
    pub area: f64,
    /// ∇λ_k for each vertex.
    pub gradients: [[f64; 2]; 3],
}

impl TriangleGeometry {
    /// Vertices must be counter-clockwise with positive area.
    pub fn new(vertices: [[f64; 2]; 3]) -> Result<Self> {
        let [p0, p1, p2] = vertices;
        let det = (p1[0] - p0[0]) * (p2[1] - p0[1]) - (p2[0] - p0[0]) * (p1[1] - p0[1]);
        let scale = vertices
            .iter()
            .flatten()
            .fold(0.0f64, |s, v| s.max(v.abs()))
            .max(1.0);
        if !det.is_finite() || det <= 1e-14 * scale * scale {
            return Err(invalid(format!("degenerate or clockwise triangle {vertices:?}")));
        }
        let gradients = [
            [(p1[1] - p2[1]) / det, (p2[0] - p1[0]) / det],
            [(p2[1] - p0[1]) / det, (p0[0] - p2[0]) / det],
            [(p0[1] - p1[1]) / det, (p1[0] - p0[0]) / det],
        ];
        Ok(TriangleGeometry {
            vertices,
            area: 0.5 * det,
            gradients,
        })
    }

    /// Maps barycentric coordinates to a physical point.
    pub fn point(&self, bary: [f64; 3]) -> [f64; 2] {
        let v = &self.vertices;
        [
            bary[0] * v[0][0] + bary[1] * v[1][0] + bary[2] * v[2][0],
            bary[0] * v[0][1] + bary[1] * v[1][1] + bary[2] * v[2][1],
        ]
    }
}

pub type ElementMatrix = [[f64; 6]; 6];

/// μ(∇u,∇v) + (λ+μ)(∇·u,∇·v).
pub fn elasticity_element_matrix(tri: &TriangleGeometry, lambda: f64, mu: f64) -> ElementMatrix {
    let g = &tri.gradients;
    let mut k = [[0.0; 6]; 6];
    for c in 0..2 {
        for d in 0..2 {
            for a in 0..3 {
                for b in 0..3 {
                    let mut v = (lambda + mu) * g[a][c] * g[b][d];
                    if c == d {
                        v += mu * (g[a][0] * g[b][0] + g[a][1] * g[b][1]);
                    }
                    k[c * 3 + a][d * 3 + b] = tri.area * v;
                }
            }
        }
    }
    k
}

/// (K⁻¹ z, w) for K = κ I.
pub fn darcy_element_matrix(tri: &TriangleGeometry, kappa: f64) -> Result<ElementMatrix> {
    if !(kappa > 0.0) {
        return Err(invalid(format!("permeability must be positive, got {kappa}")));
    }
    let s = tri.area / (12.0 * kappa);
    let mut m = [[0.0; 6]; 6];
    for c in 0..2 {
        for a in 0..3 {
            for b in 0..3 {
                m[c * 3 + a][c * 3 + b] = if a == b { 2.0 * s } else { s };
            }
        }
    }
    Ok(m)
}

/// −(1, ∇·φ_j) over the triangle for the six vector basis functions.
pub fn div_coupling_row(tri: &TriangleGeometry) -> [f64; 6] {
    let mut row = [0.0; 6];
    for c in 0..2 {
        for k in 0..3 {
            row[c * 3 + k] = -tri.area * tri.gradients[k][c];
        }
    }
    row
}

#[cfg(test)]
mod tests {
    use super::*;
    use faer::{Mat, Side};
    use proptest::prelude::*;

    fn reference() -> TriangleGeometry {
        TriangleGeometry::new([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]]).unwrap()
    }

    fn apply(m: &ElementMatrix, v: &[f64; 6]) -> [f64; 6] {
        let mut y = [0.0; 6];
        for i in 0..6 {
            y[i] = (0..6).map(|j| m[i][j] * v[j]).sum();
        }
        y
    }

    fn eigenvalues(m: &ElementMatrix) -> Vec<f64> {
        let a = Mat::<f64>::from_fn(6, 6, |i, j| m[i][j]);
        a.self_adjoint_eigenvalues(Side::Lower).unwrap()
    }

    #[test]
    fn degenerate_rejected() {
        assert!(TriangleGeometry::new([[0.0, 0.0], [1.0, 1.0], [2.0, 2.0]]).is_err());
        assert!(TriangleGeometry::new([[0.0, 0.0], [0.0, 1.0], [1.0, 0.0]]).is_err());
    }

    /// λ + μ = 0 leaves μ(∇u,∇v): the scalar P1 stiffness per component.
    #[test]
    fn reference_laplacian_blocks() {
        let k = elasticity_element_matrix(&reference(), -1.0, 1.0);
        let lap = [[1.0, -0.5, -0.5], [-0.5, 0.5, 0.0], [-0.5, 0.0, 0.5]];
        for c in 0..2 {
            for a in 0..3 {
                for b in 0..3 {
                    assert!((k[c * 3 + a][c * 3 + b] - lap[a][b]).abs() < 1e-15);
                    assert!(k[c * 3 + a][(1 - c) * 3 + b].abs() < 1e-15);
                }
            }
        }
    }

    /// λ = 0, μ = 1 on the reference triangle, by hand: ∇λ = (−1,−1), (1,0),
    /// (0,1), so the x-block adds ½ ∂ₓλ_a ∂ₓλ_b to the Laplacian and the
    /// coupling block is ½ ∂ₓλ_a ∂ᵧλ_b.
    #[test]
    fn reference_grad_div() {
        let k = elasticity_element_matrix(&reference(), 0.0, 1.0);
        let xx = [[1.5, -1.0, -0.5], [-1.0, 1.0, 0.0], [-0.5, 0.0, 0.5]];
        let yy = [[1.5, -0.5, -1.0], [-0.5, 0.5, 0.0], [-1.0, 0.0, 1.0]];
        let xy = [[0.5, 0.0, -0.5], [-0.5, 0.0, 0.5], [0.0, 0.0, 0.0]];
        for a in 0..3 {
            for b in 0..3 {
                assert!((k[a][b] - xx[a][b]).abs() < 1e-15);
                assert!((k[3 + a][3 + b] - yy[a][b]).abs() < 1e-15);
                assert!((k[a][3 + b] - xy[a][b]).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn elasticity_kernel_is_translations_only() {
        let tri = TriangleGeometry::new([[0.2, 0.1], [1.3, 0.4], [0.5, 1.7]]).unwrap();
        let k = elasticity_element_matrix(&tri, 3.0, 2.0);
        for t in [[1.0, 1.0, 1.0, 0.0, 0.0, 0.0], [0.0, 0.0, 0.0, 1.0, 1.0, 1.0]] {
            assert!(apply(&k, &t).iter().all(|v| v.abs() < 1e-13));
        }
        // rotation (-y, x)
        let v = tri.vertices;
        let rot = [-v[0][1], -v[1][1], -v[2][1], v[0][0], v[1][0], v[2][0]];
        let energy: f64 = apply(&k, &rot).iter().zip(&rot).map(|(a, b)| a * b).sum();
        assert!((energy - 2.0 * 2.0 * tri.area).abs() < 1e-12);
        let eig = eigenvalues(&k);
        assert_eq!(eig.iter().filter(|e| e.abs() < 1e-12).count(), 2);
        assert!(eig.iter().all(|&e| e > -1e-12));
    }

    #[test]
    fn darcy_mass_blocks() {
        let tri = TriangleGeometry::new([[0.0, 0.0], [2.0, 0.0], [0.0, 1.0]]).unwrap();
        let m = darcy_element_matrix(&tri, 0.5).unwrap();
        for c in 0..2 {
            for a in 0..3 {
                for b in 0..3 {
                    let e = (1.0 / 12.0) * if a == b { 2.0 } else { 1.0 } / 0.5;
                    assert!((m[c * 3 + a][c * 3 + b] - e).abs() < 1e-15);
                    assert_eq!(m[c * 3 + a][(1 - c) * 3 + b], 0.0);
                }
            }
        }
        let m2 = darcy_element_matrix(&tri, 1.0).unwrap();
        assert!((m2[0][0] - m[0][0] / 2.0).abs() < 1e-15);
        assert!(eigenvalues(&m).iter().all(|&e| e > 0.0));
        assert!(darcy_element_matrix(&tri, 0.0).is_err());
    }

    /// Mass entries against three-point edge-midpoint quadrature, exact for
    /// quadratics.
    #[test]
    fn darcy_matches_quadrature() {
        let tri = TriangleGeometry::new([[0.1, 0.0], [1.0, 0.3], [0.4, 0.9]]).unwrap();
        let m = darcy_element_matrix(&tri, 1.0).unwrap();
        let pts = [[0.5, 0.5, 0.0], [0.0, 0.5, 0.5], [0.5, 0.0, 0.5]];
        for a in 0..3 {
            for b in 0..3 {
                let q: f64 = pts.iter().map(|l| l[a] * l[b]).sum::<f64>() * tri.area / 3.0;
                assert!((m[a][b] - q).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn div_row_examples() {
        let tri = reference();
        let row = div_coupling_row(&tri);
        let tx = [1.0, 1.0, 1.0, 0.0, 0.0, 0.0];
        assert!(row.iter().zip(&tx).map(|(a, b)| a * b).sum::<f64>().abs() < 1e-15);
        // v = (x, 0)
        let vx = [0.0, 1.0, 0.0, 0.0, 0.0, 0.0];
        let val: f64 = row.iter().zip(&vx).map(|(a, b)| a * b).sum();
        assert!((val + 0.5).abs() < 1e-15);
    }

    proptest! {
        #[test]
        fn div_row_scales_linearly(s in 0.01f64..100.0) {
            let v = [[0.1, 0.2], [1.0, 0.4], [0.3, 1.1]];
            let t1 = TriangleGeometry::new(v).unwrap();
            let scaled = v.map(|p| [p[0] * s, p[1] * s]);
            let t2 = TriangleGeometry::new(scaled).unwrap();
            let (r1, r2) = (div_coupling_row(&t1), div_coupling_row(&t2));
            for j in 0..6 {
                prop_assert!((r2[j] - s * r1[j]).abs() <= 1e-12 * s.max(1.0));
            }
        }

        #[test]
        fn elasticity_symmetric_psd(
            x in proptest::collection::vec(-1.0f64..1.0, 6),
            lambda in 0.0f64..1e4,
            mu in 0.1f64..1e3,
        ) {
            let v = [[x[0], x[1]], [x[2] + 2.0, x[3]], [x[4], x[5] + 2.0]];
            if let Ok(tri) = TriangleGeometry::new(v) {
                let k = elasticity_element_matrix(&tri, lambda, mu);
                for i in 0..6 {
                    for j in 0..6 {
                        prop_assert!((k[i][j] - k[j][i]).abs() <= 1e-12 * (lambda + mu));
                    }
                }
                let scale = eigenvalues(&k).iter().fold(0.0f64, |s, e| s.max(e.abs()));
                prop_assert!(eigenvalues(&k).iter().all(|&e| e >= -1e-10 * scale));
            }
        }
    }
}
