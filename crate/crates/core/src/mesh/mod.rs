//! Structured meshes of the unit square, box partitions and the FETI-DP
//! classification of degrees of freedom.

mod dofmap;
mod dump;
mod partition;
mod structured;

pub use dofmap::{
    build_dofmap, build_dofmap_with_primal, BoundaryConditions, DofClass, DofMap, PrimalSpace, SubdomainDofs,
    NODE_DOFS, UX, UY, ZX, ZY,
};
pub use dump::{parse_mesh_dump, write_mesh_dump, MeshDump};
pub use partition::{build_partition, interior_edges_of_subdomain, SubdomainPartition};
pub use structured::{build_structured_mesh, Edge, Mesh, Side};
