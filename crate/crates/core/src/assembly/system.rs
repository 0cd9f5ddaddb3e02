//! The symmetric twofold saddle-point system of one backward-Euler step.
//!
//! In the free ordering `(u, z, p)` the assembled matrix is
//!
//! ```text
//! [ A_u     0       B₁ᵀ    ]
//! [ 0       Δt·A_z  Δt·B₂ᵀ ]
//! [ B₁      Δt·B₂   −A_p   ]      A_p = Δt·c₀·M_p + α·J
//! ```
//!
//! obtained by scaling the Darcy row by Δt and the mass-balance row by −αΔt.
//! Here B₁ carries the Biot coefficient and B₂ does not. Matrices do not
//! depend on time, so they are built once per run and only the right-hand
//! side is reassembled every step.

use rayon::prelude::*;

use crate::assembly::element::{
    darcy_element_matrix, div_coupling_row, elasticity_element_matrix, TriangleGeometry,
};
use crate::assembly::{ExactSolution, FieldState, ModelParams};
use crate::error::{invalid, Error, Result};
use crate::linalg::{csr_from_triplets, factorize_symmetric_indefinite, SparseMatrix};
use crate::mesh::{DofClass, DofMap, Mesh, SubdomainPartition, NODE_DOFS, ZX};

const NONE: usize = usize::MAX;

/// Row factors applied to the Darcy and mass-balance equations.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimeStepScaling {
    pub darcy_row: f64,
    pub mass_row: f64,
}

/// Subdomain stiffness in the local free ordering `interior, dual, primal,
/// pressures` together with its coupling to constrained dofs.
#[derive(Debug, Clone)]
pub struct LocalSystem {
    pub subdomain: usize,
    /// Global dof of each local row.
    pub dofs: Vec<usize>,
    pub matrix: SparseMatrix,
    /// Columns are positions in [`SystemMatrices::dirichlet_dofs`] listed by
    /// `lift_columns`.
    pub lift: SparseMatrix,
    pub lift_columns: Vec<usize>,
}

/// Time-independent part of the discrete system.
#[derive(Debug, Clone)]
pub struct SystemMatrices {
    pub params: ModelParams,
    pub scaling: TimeStepScaling,
    /// Free-dof matrix in the free ordering.
    pub monolithic: SparseMatrix,
    pub a_u: SparseMatrix,
    pub a_z: SparseMatrix,
    pub a_p: SparseMatrix,
    pub b1: SparseMatrix,
    pub b2: SparseMatrix,
    /// δ-scaled jump form on element pressures, without α.
    pub stabilization: SparseMatrix,
    /// Constrained dofs, ascending.
    pub dirichlet_dofs: Vec<usize>,
    /// Free rows against constrained columns.
    pub lift: SparseMatrix,
    pub locals: Vec<LocalSystem>,
    /// The pressure is defined up to a constant.
    pub gauge: bool,
    pub areas: Vec<f64>,
}

/// Right-hand side at one time level, globally and per subdomain.
#[derive(Debug, Clone, PartialEq)]
pub struct SystemRhs {
    pub time: f64,
    pub global: Vec<f64>,
    pub local: Vec<Vec<f64>>,
    /// Boundary values on [`SystemMatrices::dirichlet_dofs`].
    pub dirichlet_values: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct BlockSystem {
    pub matrices: SystemMatrices,
    pub rhs: SystemRhs,
}

impl SystemMatrices {
    /// Assembles a full state from a free-dof solution and this step's
    /// boundary values.
    pub fn state_from_free(&self, dofmap: &DofMap, rhs: &SystemRhs, free: &[f64]) -> Result<FieldState> {
        let bc: Vec<(usize, f64)> = self
            .dirichlet_dofs
            .iter()
            .copied()
            .zip(rhs.dirichlet_values.iter().copied())
            .collect();
        FieldState::from_free(dofmap, free, &bc)
    }

    /// Free-ordering ranges of the three fields.
    pub fn field_ranges(&self, dofmap: &DofMap) -> [std::ops::Range<usize>; 3] {
        let (nu, nz) = (dofmap.free_u_len(), dofmap.free_z_len());
        [0..nu, nu..nu + nz, nu + nz..dofmap.free_len()]
    }
}

fn element_dofs(tri: &[usize; 3], pressure: usize) -> [usize; 13] {
    let mut d = [0; 13];
    for c in 0..2 {
        for k in 0..3 {
            d[c * 3 + k] = NODE_DOFS * tri[k] + c;
            d[6 + c * 3 + k] = NODE_DOFS * tri[k] + ZX + c;
        }
    }
    d[12] = pressure;
    d
}

fn element_system(geo: &TriangleGeometry, params: &ModelParams) -> Result<[[f64; 13]; 13]> {
    let (lambda, mu) = params.lame();
    let dt = params.dt;
    let a = elasticity_element_matrix(geo, lambda, mu);
    let m = darcy_element_matrix(geo, params.permeability)?;
    let b = div_coupling_row(geo);
    let mut e = [[0.0; 13]; 13];
    for i in 0..6 {
        for j in 0..6 {
            e[i][j] = a[i][j];
            e[6 + i][6 + j] = dt * m[i][j];
        }
        e[12][i] = params.biot_alpha * b[i];
        e[i][12] = e[12][i];
        e[12][6 + i] = dt * b[i];
        e[6 + i][12] = e[12][6 + i];
    }
    e[12][12] = -dt * params.storage * geo.area;
    Ok(e)
}

fn geometry(mesh: &Mesh, t: usize) -> Result<TriangleGeometry> {
    TriangleGeometry::new(mesh.triangle_vertices(t))
}

/// Edges with both triangles in one subdomain, grouped by subdomain.
fn stabilized_edges_by_subdomain(mesh: &Mesh, partition: &SubdomainPartition) -> Vec<Vec<usize>> {
    let mut by_sub = vec![Vec::new(); partition.subdomain_count()];
    for (e, edge) in mesh.edges().iter().enumerate() {
        if let Some(r) = edge.right {
            let sub = partition.subdomain_of_triangle(edge.left);
            if partition.subdomain_of_triangle(r) == sub {
                by_sub[sub].push(e);
            }
        }
    }
    by_sub
}

/// Weight of one unique edge in J: each interior edge is seen from both
/// adjacent triangles, and h_∂K = |e|.
fn edge_weight(mesh: &Mesh, e: usize, delta: f64) -> f64 {
    2.0 * delta * mesh.edge_length_squared(e)
}

/// J(p, q) on element pressures (triangle indices). Edges on ∂Ω and on
/// subdomain interfaces are excluded.
pub fn stabilization_matrix(mesh: &Mesh, partition: &SubdomainPartition, delta: f64) -> Result<SparseMatrix> {
    if !(delta >= 0.0) {
        return Err(invalid(format!("stabilization factor must be non-negative, got {delta}")));
    }
    let nt = mesh.triangle_count();
    let mut t = Vec::new();
    for e in partition.stabilized_edges(mesh) {
        let edge = &mesh.edges()[e];
        let (l, r) = (edge.left, edge.right.expect("stabilized edges are interior"));
        let w = edge_weight(mesh, e, delta);
        t.extend([(l, l, w), (r, r, w), (l, r, -w), (r, l, -w)]);
    }
    if t.is_empty() {
        t.push((0, 0, 0.0));
    }
    csr_from_triplets(nt, nt, &t)?.pruned().mark_symmetric()
}

struct LocalAssembly {
    free: Vec<(usize, usize, f64)>,
    lift: Vec<(usize, usize, f64)>,
}

fn assemble_local(
    mesh: &Mesh,
    partition: &SubdomainPartition,
    dofmap: &DofMap,
    params: &ModelParams,
    sub: usize,
    edges: &[usize],
    dirichlet_pos: &[usize],
) -> Result<LocalSystem> {
    let sd = dofmap.subdomain(sub);
    let dofs: Vec<usize> = sd.free_dofs().collect();
    let mut local = vec![NONE; dofmap.total_dofs()];
    for (k, &d) in dofs.iter().enumerate() {
        local[d] = k;
    }
    let mut lift_columns = Vec::with_capacity(sd.dirichlet.len());
    let mut lift_local = vec![NONE; dofmap.total_dofs()];
    for (k, &d) in sd.dirichlet.iter().enumerate() {
        lift_local[d] = k;
        lift_columns.push(dirichlet_pos[d]);
    }

    let mut acc = LocalAssembly {
        free: Vec::with_capacity(169 * partition.triangles_of(sub).len()),
        lift: Vec::new(),
    };
    let push = |acc: &mut LocalAssembly, gi: usize, gj: usize, v: f64| {
        let i = local[gi];
        if i == NONE || v == 0.0 {
            return;
        }
        if local[gj] != NONE {
            acc.free.push((i, local[gj], v));
        } else {
            acc.lift.push((i, lift_local[gj], v));
        }
    };

    for &t in partition.triangles_of(sub) {
        let geo = geometry(mesh, t)?;
        let e = element_system(&geo, params)?;
        let d = element_dofs(&mesh.triangles()[t], dofmap.pressure_dof(t));
        for a in 0..13 {
            for b in 0..13 {
                push(&mut acc, d[a], d[b], e[a][b]);
            }
        }
    }
    for &e in edges {
        let edge = &mesh.edges()[e];
        let (l, r) = (
            dofmap.pressure_dof(edge.left),
            dofmap.pressure_dof(edge.right.expect("stabilized edges are interior")),
        );
        let w = params.biot_alpha * edge_weight(mesh, e, params.delta_stab);
        for (gi, gj, v) in [(l, l, -w), (r, r, -w), (l, r, w), (r, l, w)] {
            push(&mut acc, gi, gj, v);
        }
    }

    let n = dofs.len();
    let matrix = csr_from_triplets(n, n, &acc.free)?
        .mark_symmetric()
        .map_err(|e| Error::Consistency(format!("subdomain {sub} matrix: {e}")))?;
    let lift = csr_from_triplets(n, lift_columns.len(), &acc.lift)?;
    Ok(LocalSystem {
        subdomain: sub,
        dofs,
        matrix,
        lift,
        lift_columns,
    })
}

/// Builds every time-independent matrix: per-subdomain systems, their
/// assembled sum, and the field blocks.
pub fn assemble_system_matrices(
    mesh: &Mesh,
    partition: &SubdomainPartition,
    dofmap: &DofMap,
    params: &ModelParams,
) -> Result<SystemMatrices> {
    params.validate()?;
    if dofmap.node_count() != mesh.node_count() || dofmap.triangle_count() != mesh.triangle_count() {
        return Err(invalid("dof map does not match the mesh"));
    }
    if dofmap.subdomains().len() != partition.subdomain_count() {
        return Err(invalid("dof map does not match the partition"));
    }

    let dirichlet_dofs: Vec<usize> = (0..dofmap.total_dofs())
        .filter(|&d| dofmap.class(d) == DofClass::Dirichlet)
        .collect();
    let mut dirichlet_pos = vec![NONE; dofmap.total_dofs()];
    for (k, &d) in dirichlet_dofs.iter().enumerate() {
        dirichlet_pos[d] = k;
    }

    let edges = stabilized_edges_by_subdomain(mesh, partition);
    let locals = (0..partition.subdomain_count())
        .into_par_iter()
        .map(|sub| assemble_local(mesh, partition, dofmap, params, sub, &edges[sub], &dirichlet_pos))
        .collect::<Result<Vec<_>>>()?;

    let nf = dofmap.free_len();
    let mut tm = Vec::new();
    let mut tl = Vec::new();
    for loc in &locals {
        let fi: Vec<usize> = loc
            .dofs
            .iter()
            .map(|&d| dofmap.free_index(d).expect("local dofs are free"))
            .collect();
        tm.extend(loc.matrix.triplets().map(|(i, j, v)| (fi[i], fi[j], v)));
        tl.extend(loc.lift.triplets().map(|(i, j, v)| (fi[i], loc.lift_columns[j], v)));
    }
    let monolithic = csr_from_triplets(nf, nf, &tm)?
        .mark_symmetric()
        .map_err(|e| Error::Consistency(format!("monolithic matrix: {e}")))?;
    let lift = csr_from_triplets(nf, dirichlet_dofs.len(), &tl)?;

    let (nu, nz) = (dofmap.free_u_len(), dofmap.free_z_len());
    let ru: Vec<usize> = (0..nu).collect();
    let rz: Vec<usize> = (nu..nu + nz).collect();
    let rp: Vec<usize> = (nu + nz..nf).collect();
    let scale = |m: SparseMatrix, s: f64| -> Result<SparseMatrix> {
        let t: Vec<_> = m.triplets().map(|(i, j, v)| (i, j, v * s)).collect();
        csr_from_triplets(m.n_rows(), m.n_cols(), &t)
    };
    let dt = params.dt;
    let a_u = monolithic.submatrix(&ru, &ru);
    let a_z = scale(monolithic.submatrix(&rz, &rz), 1.0 / dt)?.mark_symmetric()?;
    let a_p = scale(monolithic.submatrix(&rp, &rp), -1.0)?.mark_symmetric()?;
    let b1 = monolithic.submatrix(&rp, &ru);
    let b2 = scale(monolithic.submatrix(&rp, &rz), 1.0 / dt)?;

    let areas = (0..mesh.triangle_count())
        .map(|t| mesh.signed_area(t))
        .collect();
    Ok(SystemMatrices {
        params: *params,
        scaling: TimeStepScaling {
            darcy_row: dt,
            mass_row: -params.biot_alpha * dt,
        },
        monolithic,
        a_u,
        a_z,
        a_p,
        b1,
        b2,
        stabilization: stabilization_matrix(mesh, partition, params.delta_stab)?,
        dirichlet_dofs,
        lift,
        locals,
        gauge: params.pressure_floating() && dofmap.boundary_conditions().pressure_floating(),
        areas,
    })
}

/// Three-point edge-midpoint rule, exact for quadratics.
const MIDPOINTS: [[f64; 3]; 3] = [[0.5, 0.5, 0.0], [0.0, 0.5, 0.5], [0.5, 0.0, 0.5]];

/// Exact boundary values on the constrained dofs at time `t`.
pub fn dirichlet_values(mesh: &Mesh, dofs: &[usize], exact: &ExactSolution, t: f64) -> Vec<f64> {
    dofs.iter()
        .map(|&d| {
            let (node, c) = (d / NODE_DOFS, d % NODE_DOFS);
            let [x, y] = mesh.nodes()[node];
            let f = exact.eval(x, y, t);
            [f.u[0], f.u[1], f.z[0], f.z[1]][c]
        })
        .collect()
}

/// Right-hand side for the step ending at `t_n`, given the previous state.
pub fn assemble_rhs(
    mats: &SystemMatrices,
    mesh: &Mesh,
    dofmap: &DofMap,
    t_n: f64,
    prev: &FieldState,
) -> Result<SystemRhs> {
    if prev.len() != dofmap.total_dofs() {
        return Err(Error::DimensionMismatch {
            expected: dofmap.total_dofs(),
            actual: prev.len(),
        });
    }
    let params = &mats.params;
    let exact = ExactSolution::new(params);
    let nt = mesh.triangle_count();
    let alpha = params.biot_alpha;

    // mass-balance row loads, per triangle
    let jp = mats.stabilization.mul_vec(prev.pressures());
    let load: Vec<f64> = (0..nt)
        .into_par_iter()
        .map(|t| -> Result<f64> {
            let geo = geometry(mesh, t)?;
            let g: f64 = MIDPOINTS
                .iter()
                .map(|&l| {
                    let [x, y] = geo.point(l);
                    exact.g1(x, y, t_n)
                })
                .sum::<f64>()
                * geo.area
                / 3.0;
            let row = div_coupling_row(&geo);
            let tri = &mesh.triangles()[t];
            let mut div_prev = 0.0;
            for k in 0..3 {
                let u = prev.u(tri[k]);
                div_prev += row[k] * u[0] + row[3 + k] * u[1];
            }
            Ok(-params.dt * g + alpha * div_prev - alpha * jp[t])
        })
        .collect::<Result<_>>()?;

    let dirichlet = dirichlet_values(mesh, &mats.dirichlet_dofs, &exact, t_n);
    let p0 = NODE_DOFS * mesh.node_count();
    let mut local: Vec<Vec<f64>> = mats
        .locals
        .par_iter()
        .map(|loc| {
            let mut f: Vec<f64> = loc
                .dofs
                .iter()
                .map(|&d| if d >= p0 { load[d - p0] } else { 0.0 })
                .collect();
            let xd: Vec<f64> = loc.lift_columns.iter().map(|&k| dirichlet[k]).collect();
            loc.lift.mul_vec_add(-1.0, &xd, &mut f);
            f
        })
        .collect();

    let nf = dofmap.free_len();
    let mut global = vec![0.0; nf];
    for (loc, f) in mats.locals.iter().zip(&local) {
        for (&d, &v) in loc.dofs.iter().zip(f) {
            global[dofmap.free_index(d).expect("free")] += v;
        }
    }
    if mats.gauge {
        let start = dofmap.free_u_len() + dofmap.free_z_len();
        let mean = global[start..].iter().sum::<f64>() / (nf - start) as f64;
        for v in &mut global[start..] {
            *v -= mean;
        }
        for (loc, f) in mats.locals.iter().zip(local.iter_mut()) {
            for (&d, v) in loc.dofs.iter().zip(f.iter_mut()) {
                if d >= p0 {
                    *v -= mean;
                }
            }
        }
    }

    Ok(SystemRhs {
        time: t_n,
        global,
        local,
        dirichlet_values: dirichlet,
    })
}

/// Matrices and right-hand side of one step in a single call.
pub fn assemble_time_step_system(
    mesh: &Mesh,
    partition: &SubdomainPartition,
    dofmap: &DofMap,
    params: &ModelParams,
    t_n: f64,
    prev: &FieldState,
) -> Result<BlockSystem> {
    let matrices = assemble_system_matrices(mesh, partition, dofmap, params)?;
    let rhs = assemble_rhs(&matrices, mesh, dofmap, t_n, prev)?;
    Ok(BlockSystem { matrices, rhs })
}

/// Sparse direct solve of the assembled system. With a floating pressure
/// the system is bordered by the area-weighted mean, so the returned
/// pressure has zero mean.
/// Iterative refinement rounds of the direct solve.
const DIRECT_REFINEMENT: usize = 2;

pub fn solve_direct(mats: &SystemMatrices, dofmap: &DofMap, rhs: &SystemRhs) -> Result<Vec<f64>> {
    let nf = dofmap.free_len();
    if rhs.global.len() != nf {
        return Err(Error::DimensionMismatch {
            expected: nf,
            actual: rhs.global.len(),
        });
    }
    if !mats.gauge {
        let a = &mats.monolithic;
        return Ok(factorize_symmetric_indefinite(a)?.solve_refined(a, &rhs.global, DIRECT_REFINEMENT));
    }
    let start = dofmap.free_u_len() + dofmap.free_z_len();
    let mut t: Vec<_> = mats.monolithic.triplets().collect();
    for (k, &a) in mats.areas.iter().enumerate() {
        t.push((start + k, nf, a));
        t.push((nf, start + k, a));
    }
    let bordered = csr_from_triplets(nf + 1, nf + 1, &t)?;
    let mut b = rhs.global.clone();
    b.push(0.0);
    let mut x = factorize_symmetric_indefinite(&bordered)?.solve_refined(&bordered, &b, DIRECT_REFINEMENT);
    x.truncate(nf);
    Ok(x)
}
