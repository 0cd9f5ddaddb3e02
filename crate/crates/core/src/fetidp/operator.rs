use std::collections::HashMap;
use std::sync::OnceLock;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::assembly::{LocalSystem, SystemMatrices, SystemRhs};
use crate::fetidp::basis::EdgeBasis;
use crate::error::{invalid, Error, Result};
use crate::fetidp::local::{to_dense_rows, LocalProblem};
use crate::fetidp::JumpOperator;
use crate::linalg::{factorize_symmetric_indefinite, pcg, DenseMatrix, Factorization, PcgOptions, PcgReport, SparseMatrix};
use crate::mesh::{DofMap, NODE_DOFS, ZX};

/// Preconditioner for the multiplier system.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum Preconditioner {
    /// Harmonic extension through the full local saddle-point interior
    /// problem (u_I, z_I, zero-mean p_I).
    #[default]
    Dirichlet,
    /// Harmonic extension through the nodal interior block only.
    DirichletAOnly,
    None,
}

impl Preconditioner {
    pub const ALL: [Preconditioner; 3] = [
        Preconditioner::Dirichlet,
        Preconditioner::DirichletAOnly,
        Preconditioner::None,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Preconditioner::Dirichlet => "dirichlet",
            Preconditioner::DirichletAOnly => "dirichlet-a-only",
            Preconditioner::None => "none",
        }
    }
}

impl std::fmt::Display for Preconditioner {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for Preconditioner {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Preconditioner::ALL
            .into_iter()
            .find(|p| p.name() == s)
            .ok_or_else(|| invalid(format!("unknown preconditioner '{s}'")))
    }
}

/// Dimensions of the decomposition.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct FetidpSizes {
    pub subdomains: usize,
    pub multipliers: usize,
    pub primal: usize,
    /// Primal nodal dofs plus one constant pressure per subdomain.
    pub coarse: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FetidpSolution {
    /// Solution on the free dofs, in the free ordering.
    pub free: Vec<f64>,
    pub lambda: Vec<f64>,
    pub report: PcgReport,
}

/// Relative tolerance on the mismatch of recovered dual copies.
pub const CONTINUITY_TOL: f64 = 1e-6;

/// FETI-DP reduction of one assembled system.
pub struct FetidpOperator {
    locals: Vec<LocalProblem>,
    local_bases: Vec<EdgeBasis>,
    free_basis: EdgeBasis,
    jump: JumpOperator,
    sizes: FetidpSizes,
    gauge: bool,
    sub_areas: Vec<f64>,
    coarse: Factorization,
    inner_coarse: OnceLock<std::result::Result<Factorization, String>>,
    local_free: Vec<Vec<usize>>,
    primal_free: Vec<usize>,
    free_len: usize,
}

impl std::fmt::Debug for FetidpOperator {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("FetidpOperator")
            .field("sizes", &self.sizes)
            .field("gauge", &self.gauge)
            .finish_non_exhaustive()
    }
}

pub fn build_fetidp(mats: &SystemMatrices, dofmap: &DofMap) -> Result<FetidpOperator> {
    let n_sub = dofmap.subdomains().len();
    if mats.locals.len() != n_sub {
        return Err(invalid("system and dof map disagree on the subdomain count"));
    }
    let n_primal = dofmap.primal_dofs().len();
    let p0 = NODE_DOFS * dofmap.node_count();
    let (locals, local_bases): (Vec<LocalProblem>, Vec<EdgeBasis>) = mats
        .locals
        .par_iter()
        .zip(dofmap.subdomains())
        .map(|(loc, sd)| {
            let areas: Vec<f64> = sd.pressures.iter().map(|&d| mats.areas[d - p0]).collect();
            let basis = local_edge_basis(dofmap, &loc.dofs);
            let transformed = LocalSystem {
                subdomain: loc.subdomain,
                dofs: loc.dofs.clone(),
                matrix: basis.transform(&loc.matrix)?,
                lift: SparseMatrix::zeros(0, 0),
                lift_columns: Vec::new(),
            };
            Ok((LocalProblem::new(&transformed, sd, &areas, n_primal)?, basis))
        })
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .unzip();
    let free_basis = EdgeBasis::new(
        dofmap.free_len(),
        dofmap
            .edge_groups()
            .iter()
            .map(|g| g.iter().map(|&d| dofmap.free_index(d).expect("free")).collect())
            .collect(),
    );
    let sub_areas: Vec<f64> = dofmap
        .subdomains()
        .iter()
        .map(|sd| sd.pressures.iter().map(|&d| mats.areas[d - p0]).sum())
        .collect();

    let coarse_dim = n_primal + n_sub;
    let coarse = assemble_coarse(&locals, coarse_dim, mats.gauge, &sub_areas, |l| &l.schur)?;
    let local_free = locals
        .iter()
        .map(|l| l.dofs.iter().map(|&d| dofmap.free_index(d).expect("free")).collect())
        .collect();
    let primal_free = dofmap
        .primal_dofs()
        .iter()
        .map(|&d| dofmap.free_index(d).expect("free"))
        .collect();
    let jump = JumpOperator::new(dofmap)?;
    Ok(FetidpOperator {
        sizes: FetidpSizes {
            subdomains: n_sub,
            multipliers: jump.multiplier_count(),
            primal: n_primal,
            coarse: coarse_dim,
        },
        locals,
        local_bases,
        free_basis,
        jump,
        gauge: mats.gauge,
        sub_areas,
        coarse,
        inner_coarse: OnceLock::new(),
        local_free,
        primal_free,
        free_len: dofmap.free_len(),
    })
}

/// Edge groups as positions in a subdomain's local ordering.
fn local_edge_basis(dofmap: &DofMap, dofs: &[usize]) -> EdgeBasis {
    let pos: HashMap<usize, usize> = dofs.iter().enumerate().map(|(k, &d)| (d, k)).collect();
    let groups = dofmap
        .edge_groups()
        .iter()
        .filter(|g| pos.contains_key(&g[0]))
        .map(|g| g.iter().map(|d| pos[d]).collect())
        .collect();
    EdgeBasis::new(dofs.len(), groups)
}

fn assemble_coarse<F>(
    locals: &[LocalProblem],
    dim: usize,
    gauge: bool,
    sub_areas: &[f64],
    block: F,
) -> Result<Factorization>
where
    F: Fn(&LocalProblem) -> &DenseMatrix,
{
    let n = dim + gauge as usize;
    let mut s = DenseMatrix::zeros(n, n);
    for l in locals {
        let b = block(l);
        for (a, &ga) in l.coarse_map.iter().enumerate() {
            for (c, &gc) in l.coarse_map.iter().enumerate() {
                s[(ga, gc)] += b[(a, c)];
            }
        }
    }
    if gauge {
        for (i, &a) in sub_areas.iter().enumerate() {
            let k = dim - sub_areas.len() + i;
            s[(k, dim)] = a;
            s[(dim, k)] = a;
        }
    }
    let sparse = SparseMatrix::from_dense(&to_dense_rows(&s))?.pruned();
    factorize_symmetric_indefinite(&sparse).map_err(|e| Error::Consistency(format!("coarse problem: {e}")))
}

impl FetidpOperator {
    pub fn sizes(&self) -> FetidpSizes {
        self.sizes
    }

    pub fn jump(&self) -> &JumpOperator {
        &self.jump
    }

    /// Length of the dual space (both copies of every dual dof).
    pub fn dual_space_len(&self) -> usize {
        self.jump.dual_space_len()
    }

    fn coarse_solve(&self, f: &Factorization, mut g: Vec<f64>) -> Vec<f64> {
        if self.gauge {
            g.push(0.0);
        }
        f.solve_in_place(&mut g);
        g.truncate(self.sizes.coarse);
        g
    }

    /// Solves the partially assembled system whose local blocks are chosen
    /// by `parts`: local factorization, local-to-coarse coupling and the
    /// eliminated coupling `K⁻¹ K_xc`.
    fn partially_assembled<P>(
        &self,
        coarse: &Factorization,
        parts: P,
        fr: Vec<Vec<f64>>,
        fc: Vec<Vec<f64>>,
    ) -> Result<(Vec<Vec<f64>>, Vec<f64>)>
    where
        P: Fn(&LocalProblem) -> Result<(&Factorization, &SparseMatrix, &DenseMatrix)> + Sync,
    {
        let ys = self
            .locals
            .par_iter()
            .zip(fr)
            .map(|(l, mut f)| {
                let (k, _, _) = parts(l)?;
                k.solve_in_place(&mut f);
                Ok(f)
            })
            .collect::<Result<Vec<_>>>()?;
        let mut g = vec![0.0; self.sizes.coarse];
        for ((l, y), f) in self.locals.iter().zip(&ys).zip(&fc) {
            let (_, k_xc, _) = parts(l)?;
            let mut loc = f.clone();
            k_xc.mul_transpose_vec_add(-1.0, y, &mut loc);
            for (&gi, v) in l.coarse_map.iter().zip(loc) {
                g[gi] += v;
            }
        }
        let uc = self.coarse_solve(coarse, g);
        let xs = self
            .locals
            .par_iter()
            .zip(ys)
            .map(|(l, mut y)| {
                let (_, _, w) = parts(l)?;
                let ul: Vec<f64> = l.coarse_map.iter().map(|&k| uc[k]).collect();
                w.mul_vec_add(-1.0, &ul, &mut y);
                Ok(y)
            })
            .collect::<Result<Vec<_>>>()?;
        Ok((xs, uc))
    }

    fn outer_parts(l: &LocalProblem) -> Result<(&Factorization, &SparseMatrix, &DenseMatrix)> {
        Ok((&l.k_rr, &l.k_rc, &l.z))
    }

    fn inner_parts(l: &LocalProblem) -> Result<(&Factorization, &SparseMatrix, &DenseMatrix)> {
        Ok((&l.k_eta, &l.k_eta_c, &l.inner()?.w))
    }

    fn check_dual(&self, v: &[f64]) -> Result<()> {
        if v.len() != self.dual_space_len() {
            return Err(Error::DimensionMismatch {
                expected: self.dual_space_len(),
                actual: v.len(),
            });
        }
        Ok(())
    }

    fn check_multipliers(&self, v: &[f64]) -> Result<()> {
        if v.len() != self.sizes.multipliers {
            return Err(Error::DimensionMismatch {
                expected: self.sizes.multipliers,
                actual: v.len(),
            });
        }
        Ok(())
    }

    fn dual_rhs(&self, g: &[f64]) -> (Vec<Vec<f64>>, Vec<Vec<f64>>) {
        let fr = self
            .locals
            .iter()
            .enumerate()
            .map(|(i, l)| {
                let mut f = vec![0.0; l.n_r()];
                f[l.dual_in_r()].copy_from_slice(&g[self.jump.range(i)]);
                f
            })
            .collect();
        let fc = self.locals.iter().map(|l| vec![0.0; l.coarse_map.len()]).collect();
        (fr, fc)
    }

    fn gather_dual(&self, xs: &[Vec<f64>]) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.dual_space_len());
        for (l, x) in self.locals.iter().zip(xs) {
            out.extend_from_slice(&x[l.dual_in_r()]);
        }
        out
    }

    /// S̃⁻¹ g: the dual part of the partially assembled solve with `g` on the
    /// dual rows.
    pub fn apply_schur_inverse(&self, g: &[f64]) -> Result<Vec<f64>> {
        self.check_dual(g)?;
        let (fr, fc) = self.dual_rhs(g);
        let (xs, _) = self.partially_assembled(&self.coarse, Self::outer_parts, fr, fc)?;
        Ok(self.gather_dual(&xs))
    }

    fn inner_coarse(&self) -> Result<&Factorization> {
        self.inner_coarse
            .get_or_init(|| {
                for l in &self.locals {
                    l.inner().map_err(|e| e.to_string())?;
                }
                assemble_coarse(&self.locals, self.sizes.coarse, self.gauge, &self.sub_areas, |l| {
                    &l.inner().expect("built above").schur
                })
                .map_err(|e| e.to_string())
            })
            .as_ref()
            .map_err(|e| Error::Consistency(e.clone()))
    }

    /// S̃ w: eliminates every non-dual unknown with `w` prescribed on the dual
    /// dofs and returns the dual residual.
    pub fn apply_schur(&self, w: &[f64]) -> Result<Vec<f64>> {
        self.check_dual(w)?;
        let coarse = self.inner_coarse()?;
        let fr: Vec<Vec<f64>> = self
            .locals
            .iter()
            .enumerate()
            .map(|(i, l)| {
                let mut f = vec![0.0; l.n_eta()];
                l.k_eta_d.mul_vec_add(-1.0, &w[self.jump.range(i)], &mut f);
                f
            })
            .collect();
        let fc: Vec<Vec<f64>> = self
            .locals
            .iter()
            .enumerate()
            .map(|(i, l)| {
                let mut f = vec![0.0; l.coarse_map.len()];
                l.k_dc.mul_transpose_vec_add(-1.0, &w[self.jump.range(i)], &mut f);
                f
            })
            .collect();
        let (xs, uc) = self.partially_assembled(coarse, Self::inner_parts, fr, fc)?;
        let mut out = Vec::with_capacity(w.len());
        for (i, (l, x)) in self.locals.iter().zip(&xs).enumerate() {
            let wi = &w[self.jump.range(i)];
            let mut y = l.k_dd.mul_vec(wi);
            l.k_eta_d.mul_transpose_vec_add(1.0, x, &mut y);
            let ul: Vec<f64> = l.coarse_map.iter().map(|&k| uc[k]).collect();
            l.k_dc.mul_vec_add(1.0, &ul, &mut y);
            out.extend(y);
        }
        Ok(out)
    }

    /// F λ = B_Δ S̃⁻¹ B_Δᵀ λ.
    pub fn apply_f(&self, lambda: &[f64]) -> Result<Vec<f64>> {
        self.check_multipliers(lambda)?;
        let g = self.apply_schur_inverse(&self.jump.apply_transpose(lambda))?;
        Ok(self.jump.apply(&g))
    }

    /// M⁻¹ r = B_{Δ,D} H_Δ B_{Δ,D}ᵀ r.
    pub fn apply_preconditioner(&self, variant: Preconditioner, r: &[f64]) -> Result<Vec<f64>> {
        self.check_multipliers(r)?;
        if variant == Preconditioner::None {
            return Ok(r.to_vec());
        }
        let u = self.jump.apply_scaled_transpose(r);
        let parts = self
            .locals
            .par_iter()
            .enumerate()
            .map(|(i, l)| {
                let w = &u[self.jump.range(i)];
                match variant {
                    Preconditioner::DirichletAOnly => l.harmonic_schur_a_only(w),
                    _ => Ok(l.harmonic_schur(w)),
                }
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(self.jump.apply_scaled(&parts.concat()))
    }

    fn split_rhs(&self, rhs: &SystemRhs) -> Result<(Vec<Vec<f64>>, Vec<Vec<f64>>)> {
        if rhs.local.len() != self.locals.len() {
            return Err(invalid("right-hand side does not match the decomposition"));
        }
        let mut fr = Vec::with_capacity(self.locals.len());
        let mut fc = Vec::with_capacity(self.locals.len());
        for ((l, b), f) in self.locals.iter().zip(&self.local_bases).zip(&rhs.local) {
            if f.len() != l.dofs.len() {
                return Err(Error::DimensionMismatch {
                    expected: l.dofs.len(),
                    actual: f.len(),
                });
            }
            let mut f = f.clone();
            b.apply(&mut f);
            let (r, c) = l.split_rhs(&f);
            fr.push(r);
            fc.push(c);
        }
        Ok((fr, fc))
    }

    /// f*_Δ: the dual load after eliminating every other unknown with zero
    /// dual values.
    pub fn reduced_rhs(&self, rhs: &SystemRhs) -> Result<Vec<f64>> {
        let (fr, fc) = self.split_rhs(rhs)?;
        let coarse = self.inner_coarse()?;
        let mut out = Vec::with_capacity(self.dual_space_len());
        let feta: Vec<Vec<f64>> = self
            .locals
            .iter()
            .zip(&fr)
            .map(|(l, r)| {
                let s = &l.sizes;
                let mut e = r[..s.interior].to_vec();
                e.extend_from_slice(&r[s.interior + s.dual..]);
                e
            })
            .collect();
        let (xs, uc) = self.partially_assembled(coarse, Self::inner_parts, feta, fc)?;
        for ((l, x), r) in self.locals.iter().zip(&xs).zip(&fr) {
            let mut y = r[l.dual_in_r()].to_vec();
            l.k_eta_d.mul_transpose_vec_add(-1.0, x, &mut y);
            let ul: Vec<f64> = l.coarse_map.iter().map(|&k| uc[k]).collect();
            l.k_dc.mul_vec_add(-1.0, &ul, &mut y);
            out.extend(y);
        }
        Ok(out)
    }

    /// d = B_Δ S̃⁻¹ f*_Δ, computed by one partially assembled solve.
    pub fn interface_rhs(&self, rhs: &SystemRhs) -> Result<Vec<f64>> {
        let (fr, fc) = self.split_rhs(rhs)?;
        let (xs, _) = self.partially_assembled(&self.coarse, Self::outer_parts, fr, fc)?;
        Ok(self.jump.apply(&self.gather_dual(&xs)))
    }

    /// PCG on F λ = d.
    pub fn solve_interface(
        &self,
        d: &[f64],
        variant: Preconditioner,
        opts: &PcgOptions,
    ) -> Result<(Vec<f64>, PcgReport)> {
        self.check_multipliers(d)?;
        // PCG takes infallible closures; the first failure is kept and
        // reported after the iteration stops.
        let failure: std::sync::Mutex<Option<Error>> = std::sync::Mutex::new(None);
        let record = |e: Error| {
            let mut f = failure.lock().expect("poisoned");
            if f.is_none() {
                *f = Some(e);
            }
        };
        let apply_a = |x: &[f64], y: &mut [f64]| match self.apply_f(x) {
            Ok(v) => y.copy_from_slice(&v),
            Err(e) => {
                record(e);
                y.fill(f64::NAN);
            }
        };
        let apply_m = |x: &[f64], y: &mut [f64]| match self.apply_preconditioner(variant, x) {
            Ok(v) => y.copy_from_slice(&v),
            Err(e) => {
                record(e);
                y.fill(f64::NAN);
            }
        };
        let result = pcg(apply_a, apply_m, d, opts);
        if let Some(e) = failure.into_inner().expect("poisoned") {
            return Err(e);
        }
        result
    }

    /// Back-substitution for all fields given the multipliers; dual copies
    /// are checked for agreement and averaged.
    pub fn recover_solution(&self, rhs: &SystemRhs, lambda: &[f64]) -> Result<Vec<f64>> {
        self.check_multipliers(lambda)?;
        let (mut fr, fc) = self.split_rhs(rhs)?;
        let bt = self.jump.apply_transpose(lambda);
        for (i, (l, f)) in self.locals.iter().zip(fr.iter_mut()).enumerate() {
            for (a, b) in f[l.dual_in_r()].iter_mut().zip(&bt[self.jump.range(i)]) {
                *a -= b;
            }
        }
        let (xs, uc) = self.partially_assembled(&self.coarse, Self::outer_parts, fr, fc)?;

        let mut x = vec![0.0; self.free_len];
        let mut first: Vec<Option<f64>> = vec![None; self.free_len];
        let mut jump_max = [0.0f64; 2];
        for (i, (l, xr)) in self.locals.iter().zip(&xs).enumerate() {
            let s = &l.sizes;
            let fi = &self.local_free[i];
            for k in 0..s.interior {
                x[fi[k]] = xr[k];
            }
            for k in 0..s.dual {
                let (g, v) = (fi[s.interior + k], xr[s.interior + k]);
                match first[g] {
                    None => {
                        first[g] = Some(v);
                        x[g] = v;
                    }
                    Some(w) => {
                        let field = (l.dofs[s.interior + k] % NODE_DOFS >= ZX) as usize;
                        jump_max[field] = jump_max[field].max((v - w).abs());
                        x[g] = 0.5 * (v + w);
                    }
                }
            }
            let p_local = s.interior + s.dual + s.primal;
            let p0 = uc[self.sizes.primal + i];
            for k in 0..s.pressure {
                x[fi[p_local + k]] = xr[s.interior + s.dual + k] + p0;
            }
        }
        for (k, &g) in self.primal_free.iter().enumerate() {
            x[g] = uc[k];
        }

        let mut scale = [0.0f64; 2];
        for (l, fi) in self.locals.iter().zip(&self.local_free) {
            let nodal = l.sizes.interior + l.sizes.dual + l.sizes.primal;
            for (&d, &g) in l.dofs[..nodal].iter().zip(fi) {
                let field = (d % NODE_DOFS >= ZX) as usize;
                scale[field] = scale[field].max(x[g].abs());
            }
        }
        for (field, name) in [(0, "u"), (1, "z")] {
            if jump_max[field] > CONTINUITY_TOL * scale[field] {
                return Err(Error::Consistency(format!(
                    "recovered {name} jumps by {:.3e} across the interface (field max {:.3e})",
                    jump_max[field], scale[field]
                )));
            }
        }
        self.free_basis.apply(&mut x);
        Ok(x)
    }

    /// Interface solve and recovery for one right-hand side.
    pub fn solve(&self, rhs: &SystemRhs, variant: Preconditioner, opts: &PcgOptions) -> Result<FetidpSolution> {
        let d = self.interface_rhs(rhs)?;
        let (lambda, report) = self.solve_interface(&d, variant, opts)?;
        let free = self.recover_solution(rhs, &lambda)?;
        Ok(FetidpSolution { free, lambda, report })
    }
}
