use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::mesh::{Mesh, Side, SubdomainPartition};

/// Scalar dofs per node: displacement `(u_x, u_y)` then Darcy flux `(z_x, z_y)`.
pub const NODE_DOFS: usize = 4;
pub const UX: usize = 0;
pub const UY: usize = 1;
pub const ZX: usize = 2;
pub const ZY: usize = 3;

/// Which sides of the square carry essential conditions: `u = g` on Γ_d and
/// `z·n = g₂` on Γ_f.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BoundaryConditions {
    pub displacement: [bool; 4],
    pub flux: [bool; 4],
}

impl BoundaryConditions {
    /// Γ_d = Γ_f = ∂Ω.
    pub fn all_essential() -> Self {
        BoundaryConditions {
            displacement: [true; 4],
            flux: [true; 4],
        }
    }

    pub fn displacement_on(&self, side: Side) -> bool {
        self.displacement[side.index()]
    }

    pub fn flux_on(&self, side: Side) -> bool {
        self.flux[side.index()]
    }

    /// True when no pressure condition is imposed anywhere, i.e. when the
    /// pressure is only determined up to a constant if there is no storage.
    pub fn pressure_floating(&self) -> bool {
        // Γ_p = ∂Ω \ Γ_f
        self.flux.iter().all(|&f| f)
    }
}

impl Default for BoundaryConditions {
    fn default() -> Self {
        Self::all_essential()
    }
}

/// Interface dofs kept globally continuous.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PrimalSpace {
    /// Every free component at subdomain cross points.
    Vertices,
    /// Cross points plus the average of each component over each interface
    /// edge.
    #[default]
    VerticesAndEdges,
}

impl PrimalSpace {
    pub const ALL: [PrimalSpace; 2] = [PrimalSpace::Vertices, PrimalSpace::VerticesAndEdges];

    pub fn name(self) -> &'static str {
        match self {
            PrimalSpace::Vertices => "vertices",
            PrimalSpace::VerticesAndEdges => "vertices-edges",
        }
    }
}

impl std::fmt::Display for PrimalSpace {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for PrimalSpace {
    type Err = crate::error::Error;
    fn from_str(s: &str) -> Result<Self> {
        PrimalSpace::ALL
            .into_iter()
            .find(|p| p.name() == s)
            .ok_or_else(|| invalid(format!("unknown primal space '{s}'")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum DofClass {
    /// Eliminated by an essential boundary condition.
    Dirichlet,
    /// Free nodal dof owned by a single subdomain.
    Interior,
    /// Free interface dof torn between two subdomains.
    Dual,
    /// Free dof at a subdomain cross point, or the representative of an
    /// edge average; kept globally continuous.
    Primal,
    /// Element pressure (split per subdomain into mean and zero-mean parts).
    Pressure,
}

/// Dofs touching one subdomain, as global dof indices. The local free
/// ordering used throughout is `interior, dual, primal, pressures`.
#[derive(Debug, Clone, PartialEq)]
pub struct SubdomainDofs {
    pub interior: Vec<usize>,
    pub dual: Vec<usize>,
    pub primal: Vec<usize>,
    /// Index of each local primal dof in the global primal list.
    pub primal_coarse: Vec<usize>,
    pub pressures: Vec<usize>,
    /// Constrained nodal dofs in the subdomain closure.
    pub dirichlet: Vec<usize>,
}

impl SubdomainDofs {
    pub fn free_len(&self) -> usize {
        self.interior.len() + self.dual.len() + self.primal.len() + self.pressures.len()
    }

    pub fn free_dofs(&self) -> impl Iterator<Item = usize> + '_ {
        self.interior
            .iter()
            .chain(&self.dual)
            .chain(&self.primal)
            .chain(&self.pressures)
            .copied()
    }

    /// Dimension of the subdomain-constant pressure space Q_0^i.
    pub fn constant_pressure_dim(&self) -> usize {
        1
    }

    /// Dimension of the zero-mean pressure space Q_I^i.
    pub fn interior_pressure_dim(&self) -> usize {
        self.pressures.len() - 1
    }
}

/// Global numbering and FETI-DP classification of every scalar dof.
///
/// Global dof `NODE_DOFS*node + c` is nodal component `c`; pressure of
/// triangle `t` is `NODE_DOFS*node_count + t`. The *free* ordering used by
/// assembled systems is: free `u` dofs, free `z` dofs, then all pressures.
#[derive(Debug, Clone, PartialEq)]
pub struct DofMap {
    node_count: usize,
    triangle_count: usize,
    bc: BoundaryConditions,
    classes: Vec<DofClass>,
    multiplicity: Vec<usize>,
    free: Vec<usize>,
    free_index: Vec<usize>,
    free_u: usize,
    free_z: usize,
    primal: Vec<usize>,
    primal_index: Vec<usize>,
    dual: Vec<usize>,
    dual_subdomains: Vec<[usize; 2]>,
    primal_space: PrimalSpace,
    edge_groups: Vec<Vec<usize>>,
    subdomains: Vec<SubdomainDofs>,
}

pub const NONE: usize = usize::MAX;

fn constrained(mesh: &Mesh, bc: &BoundaryConditions, node: usize, comp: usize) -> bool {
    Side::ALL.into_iter().any(|side| {
        mesh.node_on_side(node, side)
            && match comp {
                UX | UY => bc.displacement_on(side),
                _ => bc.flux_on(side) && side.normal_component() == comp - ZX,
            }
    })
}

/// Dof map with the vertex primal space.
pub fn build_dofmap(
    mesh: &Mesh,
    partition: &SubdomainPartition,
    bc: &BoundaryConditions,
) -> Result<DofMap> {
    build_dofmap_with_primal(mesh, partition, bc, PrimalSpace::Vertices)
}

/// Groups of one component on the interior nodes of one interface edge,
/// ascending, for every component that is free there.
fn interface_edge_groups(partition: &SubdomainPartition, classes: &[DofClass], nn: usize) -> Vec<Vec<usize>> {
    let mut groups: std::collections::BTreeMap<(usize, usize, usize), Vec<usize>> = Default::default();
    for node in 0..nn {
        let subs = partition.subdomains_of_node(node);
        if subs.len() != 2 || partition.is_corner(node) {
            continue;
        }
        for comp in 0..NODE_DOFS {
            let g = NODE_DOFS * node + comp;
            if classes[g] == DofClass::Dual {
                groups.entry((subs[0], subs[1], comp)).or_default().push(g);
            }
        }
    }
    groups.into_values().collect()
}

pub fn build_dofmap_with_primal(
    mesh: &Mesh,
    partition: &SubdomainPartition,
    bc: &BoundaryConditions,
    primal_space: PrimalSpace,
) -> Result<DofMap> {
    if partition.subdomain_of_triangle_len() != mesh.triangle_count() {
        return Err(invalid("partition does not belong to this mesh"));
    }
    let nn = mesh.node_count();
    let nt = mesh.triangle_count();
    let total = NODE_DOFS * nn + nt;

    let mut classes = vec![DofClass::Pressure; total];
    let mut multiplicity = vec![1usize; total];
    for node in 0..nn {
        let mult = partition.multiplicity(node);
        for comp in 0..NODE_DOFS {
            let g = NODE_DOFS * node + comp;
            multiplicity[g] = mult;
            classes[g] = if constrained(mesh, bc, node, comp) {
                DofClass::Dirichlet
            } else if mult == 1 {
                DofClass::Interior
            } else if partition.is_corner(node) {
                DofClass::Primal
            } else {
                DofClass::Dual
            };
        }
    }

    let edge_groups = match primal_space {
        PrimalSpace::Vertices => Vec::new(),
        PrimalSpace::VerticesAndEdges => interface_edge_groups(partition, &classes, nn),
    };
    for g in &edge_groups {
        classes[g[0]] = DofClass::Primal;
    }

    let mut free = Vec::with_capacity(total);
    for fields in [[UX, UY], [ZX, ZY]] {
        for node in 0..nn {
            for comp in fields {
                let g = NODE_DOFS * node + comp;
                if classes[g] != DofClass::Dirichlet {
                    free.push(g);
                }
            }
        }
    }
    let free_u = free.iter().filter(|&&g| g % NODE_DOFS < ZX).count();
    let free_z = free.len() - free_u;
    free.extend(NODE_DOFS * nn..total);
    let mut free_index = vec![NONE; total];
    for (k, &g) in free.iter().enumerate() {
        free_index[g] = k;
    }

    let primal: Vec<usize> = (0..NODE_DOFS * nn)
        .filter(|&g| classes[g] == DofClass::Primal)
        .collect();
    let mut primal_index = vec![NONE; total];
    for (k, &g) in primal.iter().enumerate() {
        primal_index[g] = k;
    }
    let dual: Vec<usize> = (0..NODE_DOFS * nn)
        .filter(|&g| classes[g] == DofClass::Dual)
        .collect();
    let mut dual_subdomains = Vec::with_capacity(dual.len());
    for &g in &dual {
        let subs = partition.subdomains_of_node(g / NODE_DOFS);
        if subs.len() != 2 {
            return Err(invalid(format!(
                "dual dof {g} shared by {} subdomains",
                subs.len()
            )));
        }
        dual_subdomains.push([subs[0], subs[1]]);
    }

    let subdomains = (0..partition.subdomain_count())
        .map(|sub| {
            let mut d = SubdomainDofs {
                interior: Vec::new(),
                dual: Vec::new(),
                primal: Vec::new(),
                primal_coarse: Vec::new(),
                pressures: partition
                    .triangles_of(sub)
                    .iter()
                    .map(|&t| NODE_DOFS * nn + t)
                    .collect(),
                dirichlet: Vec::new(),
            };
            for &node in partition.nodes_of(sub) {
                for comp in 0..NODE_DOFS {
                    let g = NODE_DOFS * node + comp;
                    match classes[g] {
                        DofClass::Dirichlet => d.dirichlet.push(g),
                        DofClass::Interior => d.interior.push(g),
                        DofClass::Dual => d.dual.push(g),
                        DofClass::Primal => {
                            d.primal.push(g);
                            d.primal_coarse.push(primal_index[g]);
                        }
                        DofClass::Pressure => unreachable!(),
                    }
                }
            }
            d
        })
        .collect();

    Ok(DofMap {
        node_count: nn,
        triangle_count: nt,
        bc: *bc,
        classes,
        multiplicity,
        free,
        free_index,
        free_u,
        free_z,
        primal,
        primal_index,
        dual,
        dual_subdomains,
        primal_space,
        edge_groups,
        subdomains,
    })
}

impl DofMap {
    pub fn total_dofs(&self) -> usize {
        self.classes.len()
    }

    pub fn node_count(&self) -> usize {
        self.node_count
    }

    pub fn triangle_count(&self) -> usize {
        self.triangle_count
    }

    pub fn boundary_conditions(&self) -> &BoundaryConditions {
        &self.bc
    }

    pub fn class(&self, dof: usize) -> DofClass {
        self.classes[dof]
    }

    pub fn classes(&self) -> &[DofClass] {
        &self.classes
    }

    pub fn count(&self, class: DofClass) -> usize {
        self.classes.iter().filter(|&&c| c == class).count()
    }

    /// Number of subdomains sharing the dof (N_x of its node; 1 for pressures).
    pub fn multiplicity(&self, dof: usize) -> usize {
        self.multiplicity[dof]
    }

    pub fn pressure_dof(&self, triangle: usize) -> usize {
        NODE_DOFS * self.node_count + triangle
    }

    pub fn is_pressure(&self, dof: usize) -> bool {
        dof >= NODE_DOFS * self.node_count
    }

    /// Free dofs in system ordering.
    pub fn free_dofs(&self) -> &[usize] {
        &self.free
    }

    pub fn free_len(&self) -> usize {
        self.free.len()
    }

    /// Position of a global dof in the free ordering, or `None` if constrained.
    pub fn free_index(&self, dof: usize) -> Option<usize> {
        let k = self.free_index[dof];
        (k != NONE).then_some(k)
    }

    pub fn free_u_len(&self) -> usize {
        self.free_u
    }

    pub fn free_z_len(&self) -> usize {
        self.free_z
    }

    pub fn pressure_len(&self) -> usize {
        self.triangle_count
    }

    pub fn primal_dofs(&self) -> &[usize] {
        &self.primal
    }

    pub fn primal_index(&self, dof: usize) -> Option<usize> {
        let k = self.primal_index[dof];
        (k != NONE).then_some(k)
    }

    pub fn dual_dofs(&self) -> &[usize] {
        &self.dual
    }

    /// The two subdomains (ascending) sharing each dual dof.
    pub fn dual_subdomains(&self) -> &[[usize; 2]] {
        &self.dual_subdomains
    }

    pub fn primal_space(&self) -> PrimalSpace {
        self.primal_space
    }

    /// Dofs of one component on the interior nodes of one interface edge,
    /// ascending. The first is primal and carries the edge average after the
    /// change of basis; the rest are dual. Empty for the vertex space.
    pub fn edge_groups(&self) -> &[Vec<usize>] {
        &self.edge_groups
    }

    pub fn subdomain(&self, sub: usize) -> &SubdomainDofs {
        &self.subdomains[sub]
    }

    pub fn subdomains(&self) -> &[SubdomainDofs] {
        &self.subdomains
    }
}

impl SubdomainPartition {
    pub(crate) fn subdomain_of_triangle_len(&self) -> usize {
        (0..self.subdomain_count())
            .map(|s| self.triangles_of(s).len())
            .sum()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{build_partition, build_structured_mesh};

    fn setup(m: usize, nd: usize) -> (Mesh, SubdomainPartition, DofMap) {
        let mesh = build_structured_mesh(m).unwrap();
        let p = build_partition(&mesh, nd).unwrap();
        let d = build_dofmap(&mesh, &p, &BoundaryConditions::all_essential()).unwrap();
        (mesh, p, d)
    }

    #[test]
    fn classes_partition_all_dofs() {
        for (m, nd) in [(4, 1), (8, 2), (12, 3), (16, 4)] {
            let (_, _, d) = setup(m, nd);
            let total = 4 * (m + 1) * (m + 1) + 2 * m * m;
            let sum: usize = [
                DofClass::Dirichlet,
                DofClass::Interior,
                DofClass::Dual,
                DofClass::Primal,
                DofClass::Pressure,
            ]
            .iter()
            .map(|&c| d.count(c))
            .sum();
            assert_eq!(sum, total);
            assert_eq!(d.total_dofs(), total);
            assert_eq!(d.free_len(), total - d.count(DofClass::Dirichlet));
        }
    }

    #[test]
    fn single_subdomain_has_no_interface() {
        let (_, _, d) = setup(6, 1);
        assert_eq!(d.count(DofClass::Dual), 0);
        assert_eq!(d.count(DofClass::Primal), 0);
    }

    #[test]
    fn multiplicities() {
        let (_, p, d) = setup(12, 3);
        for &g in d.dual_dofs() {
            assert_eq!(d.multiplicity(g), 2);
        }
        for &g in d.primal_dofs() {
            assert!(d.multiplicity(g) >= 2);
            assert!(p.is_corner(g / NODE_DOFS));
        }
    }

    #[test]
    fn boundary_cross_points_keep_tangential_flux() {
        let (mesh, p, d) = setup(8, 2);
        // node (4, 0): bottom side, interface between subdomains 0 and 1
        let node = 4;
        assert!(p.is_corner(node));
        assert!(mesh.node_on_side(node, Side::Bottom));
        assert_eq!(d.class(NODE_DOFS * node + UX), DofClass::Dirichlet);
        assert_eq!(d.class(NODE_DOFS * node + UY), DofClass::Dirichlet);
        assert_eq!(d.class(NODE_DOFS * node + ZX), DofClass::Primal);
        assert_eq!(d.class(NODE_DOFS * node + ZY), DofClass::Dirichlet);
        // 4 dofs at the centre cross point + one flux dof at each boundary one
        assert_eq!(d.primal_dofs().len(), 8);
        // domain corner: every flux component fixed
        assert_eq!(d.class(NODE_DOFS * 0 + ZX), DofClass::Dirichlet);
        assert_eq!(d.class(NODE_DOFS * 0 + ZY), DofClass::Dirichlet);
    }

    /// Brute-force count of dual displacement dofs on one interface segment
    /// between two cross points.
    #[test]
    fn dual_dofs_per_interface_segment() {
        let m = 16;
        let nd = 2;
        let (mesh, _, d) = setup(m, nd);
        let s = m / nd;
        // vertical segment x = 1/2, 0 < y < 1/2
        let mut n_u = 0;
        for node in 0..mesh.node_count() {
            let (i, j) = mesh.node_grid(node);
            if i == s && j > 0 && j < s {
                for comp in [UX, UY] {
                    let g = NODE_DOFS * node + comp;
                    if d.class(g) == DofClass::Dual {
                        n_u += 1;
                        let k = d.dual_dofs().iter().position(|&x| x == g).unwrap();
                        assert_eq!(d.dual_subdomains()[k], [0, 1]);
                    }
                }
            }
        }
        assert_eq!(n_u, 2 * (s - 1));
    }

    #[test]
    fn edge_primal_space() {
        for (m, nd) in [(8, 2), (12, 3), (16, 4), (6, 3)] {
            let mesh = build_structured_mesh(m).unwrap();
            let p = build_partition(&mesh, nd).unwrap();
            let bc = BoundaryConditions::all_essential();
            let v = build_dofmap(&mesh, &p, &bc).unwrap();
            let e = build_dofmap_with_primal(&mesh, &p, &bc, PrimalSpace::VerticesAndEdges).unwrap();
            let edges = 2 * nd * (nd - 1);
            assert_eq!(e.edge_groups().len(), NODE_DOFS * edges);
            assert!(v.edge_groups().is_empty());
            for g in e.edge_groups() {
                assert_eq!(g.len(), m / nd - 1);
                assert!(g.windows(2).all(|w| w[0] < w[1]));
                assert_eq!(e.class(g[0]), DofClass::Primal);
                assert!(g[1..].iter().all(|&d| e.class(d) == DofClass::Dual));
                assert!(g.iter().all(|&d| d % NODE_DOFS == g[0] % NODE_DOFS));
            }
            assert_eq!(e.primal_dofs().len(), v.primal_dofs().len() + e.edge_groups().len());
            assert_eq!(e.dual_dofs().len() + e.edge_groups().len(), v.dual_dofs().len());
            assert_eq!(e.free_dofs(), v.free_dofs());
            for &g in e.primal_dofs() {
                assert!(e.multiplicity(g) >= 2);
            }
        }
        assert_eq!("vertices-edges".parse::<PrimalSpace>().unwrap(), PrimalSpace::VerticesAndEdges);
    }

    #[test]
    fn dual_pairs_are_symmetric() {
        let (_, _, d) = setup(12, 3);
        for (k, &g) in d.dual_dofs().iter().enumerate() {
            let [a, b] = d.dual_subdomains()[k];
            assert!(d.subdomain(a).dual.contains(&g));
            assert!(d.subdomain(b).dual.contains(&g));
        }
    }

    #[test]
    fn pressure_spaces() {
        let (mesh, p, d) = setup(8, 2);
        let owned: usize = d.subdomains().iter().map(|s| s.pressures.len()).sum();
        assert_eq!(owned, mesh.triangle_count());
        for sub in 0..p.subdomain_count() {
            let s = d.subdomain(sub);
            assert_eq!(s.constant_pressure_dim(), 1);
            assert_eq!(s.interior_pressure_dim(), p.triangles_of(sub).len() - 1);
        }
    }

    /// A continuous P1 function read through each subdomain's local dofs
    /// gives identical values on both copies of every dual dof.
    #[test]
    fn continuous_function_has_matching_copies() {
        let (mesh, _, d) = setup(8, 2);
        let values: Vec<f64> = (0..d.total_dofs())
            .map(|g| {
                if d.is_pressure(g) {
                    0.0
                } else {
                    let [x, y] = mesh.nodes()[g / NODE_DOFS];
                    (g % NODE_DOFS) as f64 + 3.0 * x - 2.0 * y * y
                }
            })
            .collect();
        for (k, &g) in d.dual_dofs().iter().enumerate() {
            let [a, b] = d.dual_subdomains()[k];
            let la = d.subdomain(a).dual.iter().position(|&x| x == g).unwrap();
            let lb = d.subdomain(b).dual.iter().position(|&x| x == g).unwrap();
            assert_eq!(values[d.subdomain(a).dual[la]], values[d.subdomain(b).dual[lb]]);
        }
    }
}
