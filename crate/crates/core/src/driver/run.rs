use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::assembly::{
    assemble_rhs, assemble_system_matrices, difference_norms, error_norms, field_norms, solve_direct,
    FieldNorms, FieldState, ModelParams, SystemMatrices,
};
use crate::driver::config::{Mode, OutputFormat, Regime, RunConfig, NEARLY_INCOMPRESSIBLE};
use crate::driver::records::{format_table1, published_iterations, write_csv, write_json, ResultRecord};
use crate::error::{invalid, Result};
use crate::fetidp::{build_fetidp, Preconditioner};
use crate::linalg::{write_matrix_market, PcgOptions};
use crate::mesh::{
    build_dofmap_with_primal, build_partition, build_structured_mesh, write_mesh_dump, BoundaryConditions, DofMap,
    Mesh, PrimalSpace,
};

/// Relative field difference allowed between FETI-DP and the direct solve.
pub const ORACLE_TOL: f64 = 1e-6;
/// Minimum observed L² rates for (u, z, p).
pub const MIN_RATES: FieldNorms = FieldNorms { u: 1.6, z: 1.6, p: 0.8 };
/// Allowed spread of compressible-regime counts over N at fixed H/h.
pub const FLATNESS_SPREAD: usize = 3;
/// Allowed growth of nearly incompressible counts from the smallest to the largest N.
pub const INCOMPRESSIBLE_GROWTH: usize = 10;
/// Measured counts may be at most this multiple of the published ones.
pub const PUBLISHED_FACTOR: usize = 2;

/// One named pass/fail verdict.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

impl Check {
    fn new(name: impl Into<String>, passed: bool, detail: impl Into<String>) -> Self {
        Check {
            name: name.into(),
            passed,
            detail: detail.into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunOutput {
    pub records: Vec<ResultRecord>,
    pub checks: Vec<Check>,
}

impl RunOutput {
    pub fn passed(&self) -> bool {
        self.records.iter().all(|r| r.passed) && self.checks.iter().all(|c| c.passed)
    }
}

/// Optional debugging artifacts of the first cell.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Dumps {
    pub mesh: Option<PathBuf>,
    pub matrix: Option<PathBuf>,
}

/// Discretization of one cell.
struct Problem {
    mesh: Mesh,
    dofmap: DofMap,
    mats: SystemMatrices,
    params: ModelParams,
}

fn setup(params: ModelParams, nd: usize, ratio: usize, primal: PrimalSpace) -> Result<Problem> {
    params.validate()?;
    let mesh = build_structured_mesh(nd * ratio)?;
    let part = build_partition(&mesh, nd)?;
    let dofmap = build_dofmap_with_primal(&mesh, &part, &BoundaryConditions::all_essential(), primal)?;
    let mats = assemble_system_matrices(&mesh, &part, &dofmap, &params)?;
    Ok(Problem {
        mesh,
        dofmap,
        mats,
        params,
    })
}

fn pcg_options(config: &RunConfig) -> PcgOptions {
    PcgOptions {
        tol: config.tol,
        max_it: config.max_it,
        record_lanczos: true,
    }
}

fn write_dumps(dumps: &Dumps, nd: usize, ratio: usize, params: ModelParams) -> Result<()> {
    if dumps.mesh.is_none() && dumps.matrix.is_none() {
        return Ok(());
    }
    let mesh = build_structured_mesh(nd * ratio)?;
    let part = build_partition(&mesh, nd)?;
    if let Some(path) = &dumps.mesh {
        fs::write(path, write_mesh_dump(&mesh, &part))?;
    }
    if let Some(path) = &dumps.matrix {
        let p = setup(params, nd, ratio, PrimalSpace::Vertices)?;
        let mut f = std::io::BufWriter::new(fs::File::create(path)?);
        write_matrix_market(&p.mats.monolithic, &mut f)?;
    }
    Ok(())
}

/// Time loop of one cell with FETI-DP; a failing step ends the loop and is
/// reported in the record.
fn simulate(config: &RunConfig, nd: usize, ratio: usize, regime: Regime, dt: f64, baseline: bool) -> ResultRecord {
    let mut rec = ResultRecord::new(config, nd, ratio, regime, dt);
    if let Err(e) = simulate_into(&mut rec, config, baseline) {
        rec.converged = false;
        rec.message = e.to_string();
    }
    rec.passed = rec.converged;
    rec
}

fn simulate_into(rec: &mut ResultRecord, config: &RunConfig, baseline: bool) -> Result<()> {
    let params = config.params(rec.regime(), rec.dt);
    let t0 = Instant::now();
    let prob = setup(params, rec.nd, rec.ratio, config.primal)?;
    rec.timings.assembly += t0.elapsed().as_secs_f64();
    let t0 = Instant::now();
    let op = build_fetidp(&prob.mats, &prob.dofmap)?;
    rec.timings.factorization += t0.elapsed().as_secs_f64();
    rec.sizes = Some(op.sizes());

    let opts = pcg_options(config);
    let base_opts = PcgOptions {
        record_lanczos: false,
        ..opts
    };
    let mut state = FieldState::zeros(&prob.dofmap);
    let mut t = 0.0;
    for n in 1..=params.steps() {
        t = n as f64 * params.dt;
        let t0 = Instant::now();
        let rhs = assemble_rhs(&prob.mats, &prob.mesh, &prob.dofmap, t, &state)?;
        rec.timings.assembly += t0.elapsed().as_secs_f64();

        let t0 = Instant::now();
        let d = op.interface_rhs(&rhs)?;
        let (lambda, report) = op.solve_interface(&d, config.precond, &opts)?;
        if baseline && n == 1 {
            let (_, b) = op.solve_interface(&d, Preconditioner::None, &base_opts)?;
            rec.baseline_iterations.push(b.iterations);
        }
        rec.timings.pcg += t0.elapsed().as_secs_f64();
        rec.iterations.push(report.iterations);
        if let Some(k) = report.lanczos.as_ref().and_then(|l| l.condition_estimate()) {
            rec.condition_estimate = Some(rec.condition_estimate.map_or(k, |c: f64| c.max(k)));
        }
        if !report.converged {
            rec.message = format!(
                "step {n} (t = {t}) did not converge in {} iterations, relative residual {:.3e}",
                report.iterations, report.relative_residual
            );
            return Ok(());
        }
        let free = op.recover_solution(&rhs, &lambda)?;
        state = prob.mats.state_from_free(&prob.dofmap, &rhs, &free)?;
    }
    rec.errors = Some(error_norms(&state, &prob.mesh, &prob.params, t)?);
    rec.converged = true;
    Ok(())
}

fn cells(config: &RunConfig) -> Vec<(usize, usize, Regime)> {
    let mut out = Vec::new();
    for &regime in &config.regimes {
        for &ratio in &config.ratio {
            for &nd in &config.nsub {
                out.push((nd, ratio, regime));
            }
        }
    }
    out
}

fn within_published(r: &ResultRecord) -> Option<Check> {
    let published = published_iterations(r.nd, r.ratio, r.regime())?;
    let got = r.max_iterations();
    let passed = r.converged && got.is_some_and(|g| g <= PUBLISHED_FACTOR * published);
    Some(Check::new(
        format!("{}x{} H/h={} nu={} iterations", r.nd, r.nd, r.ratio, r.poisson),
        passed,
        format!("max {} vs published {published}", got.map_or("-".into(), |g| g.to_string())),
    ))
}

/// Full time loop with FETI-DP for every configured cell.
pub fn run_solve(config: &RunConfig, dumps: &Dumps) -> Result<RunOutput> {
    config.validate()?;
    if let Some(&(nd, ratio, regime)) = cells(config).first() {
        write_dumps(dumps, nd, ratio, config.params(regime, config.dt))?;
    }
    let records: Vec<ResultRecord> = cells(config)
        .into_iter()
        .map(|(nd, ratio, regime)| simulate(config, nd, ratio, regime, config.dt, false))
        .collect();
    let checks = records.iter().filter_map(within_published).collect();
    Ok(RunOutput { records, checks })
}

/// One time step solved both directly and with FETI-DP.
pub fn run_oracle_check(config: &RunConfig) -> Result<RunOutput> {
    config.validate()?;
    let records = cells(config)
        .into_par_iter()
        .map(|(nd, ratio, regime)| {
            let mut rec = ResultRecord::new(config, nd, ratio, regime, config.dt);
            if let Err(e) = oracle_into(&mut rec, config) {
                rec.passed = false;
                rec.message = e.to_string();
            }
            rec
        })
        .collect();
    Ok(RunOutput {
        records,
        checks: Vec::new(),
    })
}

fn oracle_into(rec: &mut ResultRecord, config: &RunConfig) -> Result<()> {
    let t0 = Instant::now();
    let prob = setup(config.params(rec.regime(), rec.dt), rec.nd, rec.ratio, config.primal)?;
    let rhs = assemble_rhs(&prob.mats, &prob.mesh, &prob.dofmap, rec.dt, &FieldState::zeros(&prob.dofmap))?;
    rec.timings.assembly = t0.elapsed().as_secs_f64();
    let t0 = Instant::now();
    let direct = solve_direct(&prob.mats, &prob.dofmap, &rhs)?;
    let op = build_fetidp(&prob.mats, &prob.dofmap)?;
    rec.timings.factorization = t0.elapsed().as_secs_f64();
    rec.sizes = Some(op.sizes());
    let t0 = Instant::now();
    let sol = op.solve(&rhs, config.precond, &pcg_options(config))?;
    rec.timings.pcg = t0.elapsed().as_secs_f64();
    rec.iterations.push(sol.report.iterations);
    rec.converged = sol.report.converged;

    let a = prob.mats.state_from_free(&prob.dofmap, &rhs, &direct)?;
    let b = prob.mats.state_from_free(&prob.dofmap, &rhs, &sol.free)?;
    let diff = relative_difference(&b, &a, &prob.mesh)?;
    rec.oracle_diff = Some(diff);
    rec.errors = Some(error_norms(&b, &prob.mesh, &prob.params, rec.dt)?);
    let (name, worst) = [("u", diff.u), ("z", diff.z), ("p", diff.p)]
        .into_iter()
        .fold(("u", f64::NEG_INFINITY), |acc, x| if x.1 > acc.1 { x } else { acc });
    rec.passed = rec.converged && worst <= ORACLE_TOL;
    rec.message = if rec.passed {
        format!("worst field {name}: {worst:.3e}")
    } else if !rec.converged {
        "interface iteration did not converge".into()
    } else {
        format!("field {name} differs by {worst:.3e} > {ORACLE_TOL:e}")
    };
    Ok(())
}

/// Field-wise ‖a − b‖ / ‖b‖.
pub fn relative_difference(a: &FieldState, b: &FieldState, mesh: &Mesh) -> Result<FieldNorms> {
    let d = difference_norms(a, b, mesh)?;
    let n = field_norms(b, mesh)?;
    let rel = |d: f64, n: f64| if n > 0.0 { d / n } else { d };
    Ok(FieldNorms {
        u: rel(d.u, n.u),
        z: rel(d.z, n.z),
        p: rel(d.p, n.p),
    })
}

/// Errors at the final time on a sequence of meshes, with Δt ∝ h starting
/// from the configured step on the coarsest mesh.
pub fn run_convergence(config: &RunConfig) -> Result<RunOutput> {
    config.validate()?;
    let coarsest = config
        .nsub
        .iter()
        .flat_map(|nd| config.ratio.iter().map(move |r| nd * r))
        .min()
        .unwrap_or(1);
    let mut records: Vec<ResultRecord> = cells(config)
        .into_iter()
        .map(|(nd, ratio, regime)| {
            let dt = config.dt * coarsest as f64 / (nd * ratio) as f64;
            simulate(config, nd, ratio, regime, dt, false)
        })
        .collect();
    records.sort_by(|a, b| {
        (a.poisson, a.permeability, a.m)
            .partial_cmp(&(b.poisson, b.permeability, b.m))
            .expect("finite parameters")
    });
    for i in 1..records.len() {
        let (prev, cur) = records.split_at_mut(i);
        let (p, c) = (&prev[i - 1], &mut cur[0]);
        if p.regime() != c.regime() || p.m == c.m {
            continue;
        }
        if let (Some(ep), Some(ec)) = (p.errors, c.errors) {
            let f = (c.m as f64 / p.m as f64).log2();
            c.rates = Some(FieldNorms {
                u: (ep.u / ec.u).log2() / f,
                z: (ep.z / ec.z).log2() / f,
                p: (ep.p / ec.p).log2() / f,
            });
        }
    }
    let checks = convergence_checks(&records);
    Ok(RunOutput { records, checks })
}

/// Rate and monotonicity verdicts per regime.
pub fn convergence_checks(records: &[ResultRecord]) -> Vec<Check> {
    let mut regimes: Vec<Regime> = Vec::new();
    for r in records {
        if !regimes.contains(&r.regime()) {
            regimes.push(r.regime());
        }
    }
    let mut checks = Vec::new();
    for g in regimes {
        let rs: Vec<&ResultRecord> = records.iter().filter(|r| r.regime() == g).collect();
        let all_converged = rs.iter().all(|r| r.converged);
        let rates: Vec<FieldNorms> = rs.iter().filter_map(|r| r.rates).collect();
        let rates_ok = all_converged
            && !rates.is_empty()
            && rates
                .iter()
                .all(|q| q.u >= MIN_RATES.u && q.z >= MIN_RATES.z && q.p >= MIN_RATES.p);
        let detail = rates
            .iter()
            .map(|q| format!("u {:.2} z {:.2} p {:.2}", q.u, q.z, q.p))
            .collect::<Vec<_>>()
            .join("; ");
        checks.push(Check::new(format!("nu={} rates", g.poisson), rates_ok, detail));
        let errs: Vec<FieldNorms> = rs.iter().filter_map(|r| r.errors).collect();
        let monotone = all_converged
            && errs.len() == rs.len()
            && errs.windows(2).all(|w| w[1].u < w[0].u && w[1].z < w[0].z && w[1].p < w[0].p);
        let detail = errs
            .iter()
            .zip(&rs)
            .map(|(e, r)| format!("m={}: {:.3e} {:.3e} {:.3e}", r.m, e.u, e.z, e.p))
            .collect::<Vec<_>>()
            .join("; ");
        checks.push(Check::new(format!("nu={} errors decrease", g.poisson), monotone, detail));
    }
    checks
}

/// Iteration counts over subdomain counts, ratios and regimes, cells in
/// parallel.
pub fn run_scalability(config: &RunConfig, baseline: bool) -> Result<RunOutput> {
    config.validate()?;
    let records: Vec<ResultRecord> = cells(config)
        .into_par_iter()
        .map(|(nd, ratio, regime)| simulate(config, nd, ratio, regime, config.dt, baseline))
        .collect();
    let mut checks = table1_checks(&records);
    if baseline {
        checks.extend(preconditioner_checks(&records));
    }
    Ok(RunOutput { records, checks })
}

/// Bound against the published counts and behaviour in N per ratio and regime.
pub fn table1_checks(records: &[ResultRecord]) -> Vec<Check> {
    let mut checks: Vec<Check> = records.iter().filter_map(within_published).collect();
    let mut keys: Vec<(usize, Regime)> = Vec::new();
    for r in records {
        if !keys.contains(&(r.ratio, r.regime())) {
            keys.push((r.ratio, r.regime()));
        }
    }
    for (ratio, g) in keys {
        let mut rs: Vec<&ResultRecord> = records.iter().filter(|r| r.ratio == ratio && r.regime() == g).collect();
        rs.sort_by_key(|r| r.nd);
        if rs.len() < 2 {
            continue;
        }
        let its: Option<Vec<usize>> = rs
            .iter()
            .map(|r| r.converged.then(|| r.max_iterations()).flatten())
            .collect();
        let name = format!("H/h={ratio} nu={} bounded in N", g.poisson);
        let Some(its) = its else {
            checks.push(Check::new(name, false, "a cell failed"));
            continue;
        };
        let (lo, hi) = (its.iter().min().copied().unwrap_or(0), its.iter().max().copied().unwrap_or(0));
        let (first, last) = (its[0], its[its.len() - 1]);
        let check = if g == NEARLY_INCOMPRESSIBLE {
            Check::new(
                name,
                last <= first + INCOMPRESSIBLE_GROWTH,
                format!("{}x{}: {first}, {}x{}: {last}", rs[0].nd, rs[0].nd, rs[rs.len() - 1].nd, rs[rs.len() - 1].nd),
            )
        } else {
            Check::new(name, hi - lo <= FLATNESS_SPREAD, format!("min {lo}, max {hi}"))
        };
        checks.push(check);
    }
    checks
}

/// Unpreconditioned counts against preconditioned counts on cells with
/// nd ≥ 4, on the steps where both were measured.
pub fn preconditioner_checks(records: &[ResultRecord]) -> Vec<Check> {
    records
        .iter()
        .filter(|r| r.nd >= 4 && !r.baseline_iterations.is_empty())
        .map(|r| {
            let passed = r.baseline_iterations.iter().zip(&r.iterations).all(|(b, p)| b >= p);
            Check::new(
                format!("{}x{} H/h={} nu={} preconditioner effect", r.nd, r.nd, r.ratio, r.poisson),
                passed,
                format!(
                    "first step {} unpreconditioned, {} preconditioned",
                    r.baseline_iterations[0],
                    r.iterations.first().copied().unwrap_or(0)
                ),
            )
        })
        .collect()
}

/// Options outside the model configuration.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct RunOptions {
    pub dumps: Dumps,
    /// Measure unpreconditioned counts in scalability mode.
    pub baseline: bool,
}

/// Runs the configured mode inside a pool of the configured size.
pub fn run(config: &RunConfig, options: &RunOptions) -> Result<RunOutput> {
    faer::set_global_parallelism(faer::Par::Seq);
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(t) = config.threads {
        builder = builder.num_threads(t);
    }
    let pool = builder.build().map_err(|e| invalid(format!("thread pool: {e}")))?;
    pool.install(|| match config.mode {
        Mode::Solve => run_solve(config, &options.dumps),
        Mode::OracleCheck => run_oracle_check(config),
        Mode::Converge => run_convergence(config),
        Mode::Scalability => run_scalability(config, options.baseline),
    })
}

/// Writes `results.csv` or `results.json`, plus `table1_repro.txt` in
/// scalability mode, into `dir`. Returns the written paths.
pub fn write_outputs(dir: &Path, mode: Mode, format: OutputFormat, out: &RunOutput) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(dir)?;
    let mut paths = Vec::new();
    let (name, text) = match format {
        OutputFormat::Csv => ("results.csv", write_csv(&out.records)?),
        OutputFormat::Json => ("results.json", write_json(&out.records)?),
    };
    let path = dir.join(name);
    fs::write(&path, text)?;
    paths.push(path);
    if mode == Mode::Scalability {
        let path = dir.join("table1_repro.txt");
        fs::write(&path, format_table1(&out.records))?;
        paths.push(path);
    }
    Ok(paths)
}
