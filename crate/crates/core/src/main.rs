use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;

use biot_fetidp::driver::{
    parse_f64_list, parse_usize_list, run, write_outputs, zip_regimes, Dumps, Mode, OutputFormat, RunConfig,
    RunOptions,
};
use biot_fetidp::fetidp::Preconditioner;
use biot_fetidp::mesh::PrimalSpace;
use biot_fetidp::Result;

/// Stabilized three-field Biot solver with FETI-DP.
#[derive(Debug, Parser)]
#[command(version, about)]
struct Cli {
    /// solve, oracle-check, converge or scalability
    #[arg(long, default_value = "solve")]
    mode: Mode,
    /// Subdomains per side, e.g. `2,4` or `2-8`
    #[arg(long)]
    nsub: Option<String>,
    /// Elements per subdomain side H/h, e.g. `8,12,16`
    #[arg(long)]
    ratio: Option<String>,
    /// Poisson ratios, paired entry by entry with --perm
    #[arg(long)]
    nu: Option<String>,
    /// Permeabilities, paired entry by entry with --nu
    #[arg(long)]
    perm: Option<String>,
    #[arg(long)]
    young: Option<f64>,
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long)]
    storage: Option<f64>,
    #[arg(long)]
    delta_stab: Option<f64>,
    /// Time step; in converge mode the step on the coarsest mesh
    #[arg(long)]
    dt: Option<f64>,
    #[arg(long)]
    t_end: Option<f64>,
    /// Relative residual tolerance of PCG
    #[arg(long)]
    tol: Option<f64>,
    #[arg(long)]
    max_it: Option<usize>,
    /// dirichlet, dirichlet-a-only or none
    #[arg(long)]
    precond: Option<Preconditioner>,
    /// Primal space: vertices or vertices-edges
    #[arg(long)]
    primal: Option<PrimalSpace>,
    /// Worker threads; defaults to the available cores
    #[arg(long)]
    threads: Option<usize>,
    /// Output directory
    #[arg(long, default_value = "results")]
    out: PathBuf,
    /// csv or json
    #[arg(long, default_value = "csv")]
    format: OutputFormat,
    /// Skip the unpreconditioned first-step comparison in scalability mode
    #[arg(long)]
    no_baseline: bool,
    /// Write the mesh and partition of the first cell
    #[arg(long)]
    dump_mesh: Option<PathBuf>,
    /// Write the assembled matrix of the first cell in MatrixMarket format
    #[arg(long)]
    dump_matrix: Option<PathBuf>,
}

fn config(cli: &Cli) -> Result<RunConfig> {
    let mut c = RunConfig::for_mode(cli.mode);
    if let Some(s) = &cli.nsub {
        c.nsub = parse_usize_list(s)?;
    }
    if let Some(s) = &cli.ratio {
        c.ratio = parse_usize_list(s)?;
    }
    if cli.nu.is_some() || cli.perm.is_some() {
        let nu = match &cli.nu {
            Some(s) => parse_f64_list(s)?,
            None => c.regimes.iter().map(|r| r.poisson).collect(),
        };
        let perm = match &cli.perm {
            Some(s) => parse_f64_list(s)?,
            None => c.regimes.iter().map(|r| r.permeability).collect(),
        };
        c.regimes = zip_regimes(&nu, &perm)?;
    }
    macro_rules! set {
        ($($field:ident <- $flag:ident),*) => { $(if let Some(v) = cli.$flag { c.$field = v; })* };
    }
    set!(young <- young, biot_alpha <- alpha, storage <- storage, delta_stab <- delta_stab,
         dt <- dt, t_end <- t_end, tol <- tol, max_it <- max_it, precond <- precond, primal <- primal);
    c.threads = cli.threads;
    c.out = cli.out.clone();
    c.format = cli.format;
    c.validate()?;
    Ok(c)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = config(&cli).and_then(|c| {
        let options = RunOptions {
            dumps: Dumps {
                mesh: cli.dump_mesh.clone(),
                matrix: cli.dump_matrix.clone(),
            },
            baseline: !cli.no_baseline,
        };
        let out = run(&c, &options)?;
        let paths = write_outputs(&c.out, c.mode, c.format, &out)?;
        Ok((out, paths))
    });
    match result {
        Ok((out, paths)) => {
            for r in &out.records {
                println!(
                    "{}x{} H/h={} nu={} kappa={:e}: iterations max {} {} {}",
                    r.nd,
                    r.nd,
                    r.ratio,
                    r.poisson,
                    r.permeability,
                    r.max_iterations().map_or("-".into(), |v| v.to_string()),
                    if r.passed { "ok" } else { "FAILED" },
                    r.message
                );
            }
            for c in &out.checks {
                println!("{} {}: {}", if c.passed { "PASS" } else { "FAIL" }, c.name, c.detail);
            }
            for p in paths {
                println!("wrote {}", p.display());
            }
            if out.passed() {
                ExitCode::SUCCESS
            } else {
                ExitCode::FAILURE
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
