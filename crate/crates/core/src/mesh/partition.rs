use crate::error::{invalid, Result};
use crate::mesh::Mesh;

/// Square array of `nd x nd` box subdomains, each covering `m/nd` cells per
/// side. Subdomain `(I, J)` has index `J*nd + I`.
#[derive(Debug, Clone, PartialEq)]
pub struct SubdomainPartition {
    nd: usize,
    cells_per_subdomain: usize,
    subdomain_of_triangle: Vec<usize>,
    triangles: Vec<Vec<usize>>,
    nodes: Vec<Vec<usize>>,
    node_subdomains: Vec<Vec<usize>>,
    interface_nodes: Vec<usize>,
    corner_nodes: Vec<usize>,
    is_corner: Vec<bool>,
}

pub fn build_partition(mesh: &Mesh, nd: usize) -> Result<SubdomainPartition> {
    let m = mesh.elements_per_side();
    if nd == 0 {
        return Err(invalid("need at least one subdomain per side"));
    }
    if m % nd != 0 {
        return Err(invalid(format!(
            "{nd} subdomains per side do not divide {m} elements per side"
        )));
    }
    let s = m / nd;
    let n_sub = nd * nd;

    let mut subdomain_of_triangle = Vec::with_capacity(mesh.triangle_count());
    let mut triangles = vec![Vec::with_capacity(2 * s * s); n_sub];
    for t in 0..mesh.triangle_count() {
        let (ci, cj) = mesh.triangle_cell(t);
        let sub = (cj / s) * nd + ci / s;
        subdomain_of_triangle.push(sub);
        triangles[sub].push(t);
    }

    let mut node_subdomains: Vec<Vec<usize>> = vec![Vec::new(); mesh.node_count()];
    for (t, tri) in mesh.triangles().iter().enumerate() {
        let sub = subdomain_of_triangle[t];
        for &n in tri {
            if !node_subdomains[n].contains(&sub) {
                node_subdomains[n].push(sub);
            }
        }
    }
    let mut nodes = vec![Vec::new(); n_sub];
    for (n, subs) in node_subdomains.iter_mut().enumerate() {
        subs.sort_unstable();
        for &sub in subs.iter() {
            nodes[sub].push(n);
        }
    }

    let mut interface_nodes = Vec::new();
    let mut corner_nodes = Vec::new();
    let mut is_corner = vec![false; mesh.node_count()];
    for n in 0..mesh.node_count() {
        let shared = node_subdomains[n].len() >= 2;
        if shared && !mesh.node_on_boundary(n) {
            interface_nodes.push(n);
        }
        let (i, j) = mesh.node_grid(n);
        if shared && i % s == 0 && j % s == 0 {
            corner_nodes.push(n);
            is_corner[n] = true;
        }
    }

    Ok(SubdomainPartition {
        nd,
        cells_per_subdomain: s,
        subdomain_of_triangle,
        triangles,
        nodes,
        node_subdomains,
        interface_nodes,
        corner_nodes,
        is_corner,
    })
}

impl SubdomainPartition {
    pub fn subdomains_per_side(&self) -> usize {
        self.nd
    }

    pub fn subdomain_count(&self) -> usize {
        self.nd * self.nd
    }

    /// H/h.
    pub fn cells_per_subdomain(&self) -> usize {
        self.cells_per_subdomain
    }

    pub fn subdomain_of_triangle(&self, t: usize) -> usize {
        self.subdomain_of_triangle[t]
    }

    pub fn triangles_of(&self, sub: usize) -> &[usize] {
        &self.triangles[sub]
    }

    /// Nodes in the closure of a subdomain, ascending.
    pub fn nodes_of(&self, sub: usize) -> &[usize] {
        &self.nodes[sub]
    }

    /// Subdomains whose closure contains the node, ascending.
    pub fn subdomains_of_node(&self, node: usize) -> &[usize] {
        &self.node_subdomains[node]
    }

    pub fn multiplicity(&self, node: usize) -> usize {
        self.node_subdomains[node].len()
    }

    /// Γ = (∪ ∂Ω_i) \ ∂Ω.
    pub fn interface_nodes(&self) -> &[usize] {
        &self.interface_nodes
    }

    /// Subdomain cross points, including those on ∂Ω.
    pub fn corner_nodes(&self) -> &[usize] {
        &self.corner_nodes
    }

    pub fn is_corner(&self, node: usize) -> bool {
        self.is_corner[node]
    }

    /// Edges whose two triangles belong to the same subdomain.
    pub fn is_subdomain_interior_edge(&self, mesh: &Mesh, e: usize) -> bool {
        let edge = &mesh.edges()[e];
        match edge.right {
            Some(r) => self.subdomain_of_triangle[edge.left] == self.subdomain_of_triangle[r],
            None => false,
        }
    }

    pub fn stabilized_edges(&self, mesh: &Mesh) -> Vec<usize> {
        (0..mesh.edges().len())
            .filter(|&e| self.is_subdomain_interior_edge(mesh, e))
            .collect()
    }
}

/// Edges with both adjacent triangles inside subdomain `sub`.
pub fn interior_edges_of_subdomain(
    mesh: &Mesh,
    partition: &SubdomainPartition,
    sub: usize,
) -> Result<Vec<usize>> {
    if sub >= partition.subdomain_count() {
        return Err(invalid(format!(
            "subdomain {sub} out of range (have {})",
            partition.subdomain_count()
        )));
    }
    Ok((0..mesh.edges().len())
        .filter(|&e| {
            let edge = &mesh.edges()[e];
            edge.right.is_some_and(|r| {
                partition.subdomain_of_triangle(edge.left) == sub
                    && partition.subdomain_of_triangle(r) == sub
            })
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::build_structured_mesh;

    fn interior_cross_points(mesh: &Mesh, p: &SubdomainPartition) -> usize {
        p.corner_nodes()
            .iter()
            .filter(|&&n| !mesh.node_on_boundary(n))
            .count()
    }

    #[test]
    fn two_by_two() {
        let mesh = build_structured_mesh(16).unwrap();
        let p = build_partition(&mesh, 2).unwrap();
        assert_eq!(p.subdomain_count(), 4);
        for sub in 0..4 {
            assert_eq!(p.triangles_of(sub).len(), 128);
        }
        assert_eq!(interior_cross_points(&mesh, &p), 1);
        assert_eq!(p.corner_nodes().len(), 1 + 4);
    }

    #[test]
    fn four_by_four() {
        let mesh = build_structured_mesh(16).unwrap();
        let p = build_partition(&mesh, 4).unwrap();
        assert_eq!(interior_cross_points(&mesh, &p), 9);
        assert_eq!(p.corner_nodes().len(), 9 + 12);
    }

    #[test]
    fn indivisible_rejected() {
        let mesh = build_structured_mesh(8).unwrap();
        assert!(build_partition(&mesh, 3).is_err());
        assert!(build_partition(&mesh, 0).is_err());
    }

    /// Γ by brute force from the definition: a node is on Γ iff it lies on
    /// the boundary of some subdomain box and not on ∂Ω.
    #[test]
    fn interface_matches_box_boundaries() {
        let mesh = build_structured_mesh(12).unwrap();
        for nd in [1, 2, 3, 4, 6] {
            let p = build_partition(&mesh, nd).unwrap();
            let hh = 1.0 / nd as f64;
            let on_line = |c: f64| ((c / hh).round() * hh - c).abs() < 1e-12;
            let expected: Vec<usize> = (0..mesh.node_count())
                .filter(|&n| {
                    let [x, y] = mesh.nodes()[n];
                    !mesh.node_on_boundary(n) && (on_line(x) || on_line(y))
                })
                .collect();
            assert_eq!(p.interface_nodes(), expected.as_slice(), "nd={nd}");
        }
    }

    #[test]
    fn interior_edges_examples() {
        let m1 = build_structured_mesh(1).unwrap();
        let p = build_partition(&m1, 1).unwrap();
        assert_eq!(interior_edges_of_subdomain(&m1, &p, 0).unwrap().len(), 1);

        let m2 = build_structured_mesh(2).unwrap();
        let p = build_partition(&m2, 1).unwrap();
        // 4 diagonals + 2 interior horizontal + 2 interior vertical segments
        assert_eq!(interior_edges_of_subdomain(&m2, &p, 0).unwrap().len(), 8);
        let p = build_partition(&m2, 2).unwrap();
        for sub in 0..4 {
            assert_eq!(interior_edges_of_subdomain(&m2, &p, sub).unwrap().len(), 1);
        }
        assert!(interior_edges_of_subdomain(&m2, &p, 4).is_err());
    }
}
