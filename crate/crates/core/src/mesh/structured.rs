use std::collections::HashMap;

use crate::error::{invalid, Result};

/// One of the four sides of the unit square.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Side {
    Bottom,
    Right,
    Top,
    Left,
}

impl Side {
    pub const ALL: [Side; 4] = [Side::Bottom, Side::Right, Side::Top, Side::Left];

    /// Index of the vector component normal to this side (0 = x, 1 = y).
    pub fn normal_component(self) -> usize {
        match self {
            Side::Left | Side::Right => 0,
            Side::Bottom | Side::Top => 1,
        }
    }

    /// Outward unit normal.
    pub fn outward_normal(self) -> [f64; 2] {
        match self {
            Side::Bottom => [0.0, -1.0],
            Side::Right => [1.0, 0.0],
            Side::Top => [0.0, 1.0],
            Side::Left => [-1.0, 0.0],
        }
    }

    pub fn index(self) -> usize {
        self as usize
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Edge {
    /// End points, lower node index first.
    pub nodes: [usize; 2],
    pub left: usize,
    /// `None` for boundary edges.
    pub right: Option<usize>,
    pub boundary: Option<Side>,
}

impl Edge {
    pub fn is_interior(&self) -> bool {
        self.right.is_some()
    }
}

/// Structured triangulation of the unit square with `m` cells per side.
///
/// Node `(i, j)` sits at `(i/m, j/m)` and has index `j*(m+1) + i`. Cell
/// `(i, j)` is split along its lower-left to upper-right diagonal into the
/// triangles `2*(j*m+i)` (below the diagonal) and `2*(j*m+i)+1` (above).
#[derive(Debug, Clone, PartialEq)]
pub struct Mesh {
    m: usize,
    nodes: Vec<[f64; 2]>,
    triangles: Vec<[usize; 3]>,
    edges: Vec<Edge>,
}

pub fn build_structured_mesh(m: usize) -> Result<Mesh> {
    if m == 0 {
        return Err(invalid("mesh needs at least one element per side"));
    }
    let np = m + 1;
    let h = 1.0 / m as f64;
    let mut nodes = Vec::with_capacity(np * np);
    for j in 0..np {
        for i in 0..np {
            nodes.push([i as f64 * h, j as f64 * h]);
        }
    }
    // exact grid coordinates on the boundary
    for n in nodes.iter_mut() {
        for c in n.iter_mut() {
            if (*c - 1.0).abs() < 0.5 * h {
                *c = 1.0;
            }
        }
    }

    let mut triangles = Vec::with_capacity(2 * m * m);
    for j in 0..m {
        for i in 0..m {
            let ll = j * np + i;
            let lr = ll + 1;
            let ul = ll + np;
            let ur = ul + 1;
            triangles.push([ll, lr, ur]);
            triangles.push([ll, ur, ul]);
        }
    }

    let mut index: HashMap<(usize, usize), usize> = HashMap::with_capacity(3 * m * m + 2 * m);
    let mut edges: Vec<Edge> = Vec::with_capacity(3 * m * m + 2 * m);
    for (t, tri) in triangles.iter().enumerate() {
        for k in 0..3 {
            let a = tri[k];
            let b = tri[(k + 1) % 3];
            let key = (a.min(b), a.max(b));
            match index.get(&key) {
                Some(&e) => edges[e].right = Some(t),
                None => {
                    index.insert(key, edges.len());
                    edges.push(Edge {
                        nodes: [key.0, key.1],
                        left: t,
                        right: None,
                        boundary: None,
                    });
                }
            }
        }
    }

    let mut mesh = Mesh {
        m,
        nodes,
        triangles,
        edges,
    };
    for e in 0..mesh.edges.len() {
        if mesh.edges[e].right.is_none() {
            let [a, b] = mesh.edges[e].nodes;
            let side = Side::ALL
                .into_iter()
                .find(|&s| mesh.node_on_side(a, s) && mesh.node_on_side(b, s));
            mesh.edges[e].boundary = side;
        }
    }
    Ok(mesh)
}

impl Mesh {
    pub fn elements_per_side(&self) -> usize {
        self.m
    }

    pub fn h(&self) -> f64 {
        1.0 / self.m as f64
    }

    pub fn nodes(&self) -> &[[f64; 2]] {
        &self.nodes
    }

    pub fn triangles(&self) -> &[[usize; 3]] {
        &self.triangles
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn triangle_count(&self) -> usize {
        self.triangles.len()
    }

    /// Grid coordinates `(i, j)` of a node.
    pub fn node_grid(&self, node: usize) -> (usize, usize) {
        (node % (self.m + 1), node / (self.m + 1))
    }

    /// Grid coordinates of the cell containing a triangle.
    pub fn triangle_cell(&self, t: usize) -> (usize, usize) {
        let c = t / 2;
        (c % self.m, c / self.m)
    }

    pub fn node_on_side(&self, node: usize, side: Side) -> bool {
        let (i, j) = self.node_grid(node);
        match side {
            Side::Bottom => j == 0,
            Side::Right => i == self.m,
            Side::Top => j == self.m,
            Side::Left => i == 0,
        }
    }

    pub fn node_on_boundary(&self, node: usize) -> bool {
        Side::ALL.into_iter().any(|s| self.node_on_side(node, s))
    }

    pub fn triangle_vertices(&self, t: usize) -> [[f64; 2]; 3] {
        let [a, b, c] = self.triangles[t];
        [self.nodes[a], self.nodes[b], self.nodes[c]]
    }

    /// Signed area (positive for counter-clockwise orientation).
    pub fn signed_area(&self, t: usize) -> f64 {
        let [p0, p1, p2] = self.triangle_vertices(t);
        0.5 * ((p1[0] - p0[0]) * (p2[1] - p0[1]) - (p2[0] - p0[0]) * (p1[1] - p0[1]))
    }

    pub fn edge_length(&self, e: usize) -> f64 {
        self.edge_length_squared(e).sqrt()
    }

    /// Exact on dyadic coordinates.
    pub fn edge_length_squared(&self, e: usize) -> f64 {
        let [a, b] = self.edges[e].nodes;
        let (pa, pb) = (self.nodes[a], self.nodes[b]);
        let (dx, dy) = (pb[0] - pa[0], pb[1] - pa[1]);
        dx * dx + dy * dy
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_elements_rejected() {
        assert!(build_structured_mesh(0).is_err());
    }

    #[test]
    fn smallest_mesh() {
        let mesh = build_structured_mesh(1).unwrap();
        assert_eq!(mesh.node_count(), 4);
        assert_eq!(mesh.triangle_count(), 2);
        assert_eq!(mesh.edges().iter().filter(|e| e.is_interior()).count(), 1);
        let diag = mesh.edges().iter().find(|e| e.is_interior()).unwrap();
        assert_eq!(diag.nodes, [0, 3]);
    }

    #[test]
    fn counts_follow_formula() {
        for (m, nn, nt) in [(2, 9, 8), (128, 16641, 32768)] {
            let mesh = build_structured_mesh(m).unwrap();
            assert_eq!(mesh.node_count(), nn);
            assert_eq!(mesh.triangle_count(), nt);
        }
    }

    #[test]
    fn orientation_and_area() {
        for m in [1, 3, 8] {
            let mesh = build_structured_mesh(m).unwrap();
            let expected = 1.0 / (2.0 * (m * m) as f64);
            for t in 0..mesh.triangle_count() {
                assert!((mesh.signed_area(t) - expected).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn edge_adjacency() {
        let m = 5;
        let mesh = build_structured_mesh(m).unwrap();
        let boundary = mesh.edges().iter().filter(|e| !e.is_interior()).count();
        assert_eq!(boundary, 4 * m);
        // Euler: E = V + F - 1 for a disc
        assert_eq!(mesh.edges().len(), mesh.node_count() + mesh.triangle_count() - 1);
        for e in mesh.edges() {
            assert_eq!(e.is_interior(), e.boundary.is_none());
        }
        for side in Side::ALL {
            let n = mesh.edges().iter().filter(|e| e.boundary == Some(side)).count();
            assert_eq!(n, m);
        }
    }

    #[test]
    fn deterministic() {
        assert_eq!(build_structured_mesh(7).unwrap(), build_structured_mesh(7).unwrap());
    }
}
