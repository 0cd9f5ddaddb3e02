use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::assembly::FieldNorms;
use crate::driver::config::{Mode, Regime, RunConfig, COMPRESSIBLE, NEARLY_INCOMPRESSIBLE};
use crate::error::{Error, Result};
use crate::fetidp::{FetidpSizes, Preconditioner};
use crate::mesh::PrimalSpace;

pub const SCHEMA_VERSION: u32 = 1;

/// Wall-clock seconds per phase.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct Timings {
    pub assembly: f64,
    pub factorization: f64,
    pub pcg: f64,
}

/// Outcome of one cell of one mode.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultRecord {
    pub schema_version: u32,
    pub mode: Mode,
    pub nd: usize,
    pub ratio: usize,
    pub m: usize,
    pub poisson: f64,
    pub permeability: f64,
    pub young: f64,
    pub biot_alpha: f64,
    pub storage: f64,
    pub delta_stab: f64,
    pub dt: f64,
    pub t_end: f64,
    pub tol: f64,
    pub precond: Preconditioner,
    pub primal: PrimalSpace,
    /// PCG iterations of every completed time step.
    pub iterations: Vec<usize>,
    /// Unpreconditioned iterations on the interface system of the first
    /// step, when measured.
    pub baseline_iterations: Vec<usize>,
    /// L² errors against the exact solution at the last completed step.
    pub errors: Option<FieldNorms>,
    /// Relative L² differences between FETI-DP and the direct solve.
    pub oracle_diff: Option<FieldNorms>,
    /// Observed rates against the next coarser mesh.
    pub rates: Option<FieldNorms>,
    /// Largest Lanczos condition estimate over the steps.
    pub condition_estimate: Option<f64>,
    pub sizes: Option<FetidpSizes>,
    pub timings: Timings,
    pub converged: bool,
    pub passed: bool,
    pub message: String,
}

impl ResultRecord {
    pub fn new(config: &RunConfig, nd: usize, ratio: usize, regime: Regime, dt: f64) -> Self {
        ResultRecord {
            schema_version: SCHEMA_VERSION,
            mode: config.mode,
            nd,
            ratio,
            m: nd * ratio,
            poisson: regime.poisson,
            permeability: regime.permeability,
            young: config.young,
            biot_alpha: config.biot_alpha,
            storage: config.storage,
            delta_stab: config.delta_stab,
            dt,
            t_end: config.t_end,
            tol: config.tol,
            precond: config.precond,
            primal: config.primal,
            iterations: Vec::new(),
            baseline_iterations: Vec::new(),
            errors: None,
            oracle_diff: None,
            rates: None,
            condition_estimate: None,
            sizes: None,
            timings: Timings::default(),
            converged: false,
            passed: false,
            message: String::new(),
        }
    }

    pub fn regime(&self) -> Regime {
        Regime {
            poisson: self.poisson,
            permeability: self.permeability,
        }
    }

    pub fn max_iterations(&self) -> Option<usize> {
        self.iterations.iter().copied().max()
    }

    pub fn mean_iterations(&self) -> Option<f64> {
        mean(&self.iterations)
    }

    pub fn max_baseline_iterations(&self) -> Option<usize> {
        self.baseline_iterations.iter().copied().max()
    }
}

fn mean(v: &[usize]) -> Option<f64> {
    (!v.is_empty()).then(|| v.iter().sum::<usize>() as f64 / v.len() as f64)
}

/// Flat CSV row; timings are left out so that reruns are byte-identical.
#[derive(Debug, Serialize)]
struct CsvRow<'a> {
    schema_version: u32,
    mode: &'a str,
    nd: usize,
    ratio: usize,
    m: usize,
    nu: f64,
    kappa: f64,
    delta_stab: f64,
    dt: f64,
    precond: &'a str,
    primal: &'a str,
    stat: &'a str,
    steps: usize,
    iterations: Option<f64>,
    baseline_iterations: Option<f64>,
    err_u: Option<f64>,
    err_z: Option<f64>,
    err_p: Option<f64>,
    diff_u: Option<f64>,
    diff_z: Option<f64>,
    diff_p: Option<f64>,
    rate_u: Option<f64>,
    rate_z: Option<f64>,
    rate_p: Option<f64>,
    condition: Option<f64>,
    multipliers: Option<usize>,
    coarse: Option<usize>,
    converged: bool,
    passed: bool,
    message: &'a str,
}

/// Two rows per record: the max and the mean over time steps.
pub fn write_csv(records: &[ResultRecord]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in records {
        let stats = [
            ("max", r.max_iterations().map(|v| v as f64), r.max_baseline_iterations().map(|v| v as f64)),
            ("mean", r.mean_iterations(), mean(&r.baseline_iterations)),
        ];
        for (stat, it, base) in stats {
            w.serialize(CsvRow {
                schema_version: r.schema_version,
                mode: r.mode.name(),
                nd: r.nd,
                ratio: r.ratio,
                m: r.m,
                nu: r.poisson,
                kappa: r.permeability,
                delta_stab: r.delta_stab,
                dt: r.dt,
                precond: r.precond.name(),
                primal: r.primal.name(),
                stat,
                steps: r.iterations.len(),
                iterations: it,
                baseline_iterations: base,
                err_u: r.errors.map(|e| e.u),
                err_z: r.errors.map(|e| e.z),
                err_p: r.errors.map(|e| e.p),
                diff_u: r.oracle_diff.map(|e| e.u),
                diff_z: r.oracle_diff.map(|e| e.z),
                diff_p: r.oracle_diff.map(|e| e.p),
                rate_u: r.rates.map(|e| e.u),
                rate_z: r.rates.map(|e| e.z),
                rate_p: r.rates.map(|e| e.p),
                condition: r.condition_estimate,
                multipliers: r.sizes.map(|s| s.multipliers),
                coarse: r.sizes.map(|s| s.coarse),
                converged: r.converged,
                passed: r.passed,
                message: &r.message,
            })
            .map_err(|e| Error::Backend(format!("csv: {e}")))?;
        }
    }
    let bytes = w.into_inner().map_err(|e| Error::Backend(format!("csv: {e}")))?;
    String::from_utf8(bytes).map_err(|e| Error::Backend(format!("csv: {e}")))
}

pub fn write_json(records: &[ResultRecord]) -> Result<String> {
    Ok(serde_json::to_string_pretty(records)?)
}

/// Parses the JSON written by [`write_json`], checking the schema version.
pub fn read_results_json(text: &str) -> Result<Vec<ResultRecord>> {
    let records: Vec<ResultRecord> = serde_json::from_str(text)?;
    if let Some(r) = records.iter().find(|r| r.schema_version != SCHEMA_VERSION) {
        return Err(Error::Parse {
            line: 0,
            message: format!("unsupported schema version {}", r.schema_version),
        });
    }
    Ok(records)
}

/// Published iteration counts, rows N = 2×2 … 8×8, columns
/// (H/h, regime) = (8, c), (8, i), (12, c), (12, i), (16, c), (16, i).
pub const PUBLISHED_TABLE1: [[usize; 6]; 7] = [
    [4, 9, 4, 10, 4, 11],
    [5, 9, 5, 12, 5, 14],
    [5, 9, 5, 12, 5, 17],
    [5, 10, 5, 13, 5, 15],
    [5, 11, 5, 13, 5, 16],
    [5, 12, 5, 15, 5, 16],
    [5, 12, 5, 13, 5, 17],
];

pub const TABLE1_RATIOS: [usize; 3] = [8, 12, 16];
pub const TABLE1_REGIMES: [Regime; 2] = [COMPRESSIBLE, NEARLY_INCOMPRESSIBLE];

/// Published count for a cell, if it is part of the table.
pub fn published_iterations(nd: usize, ratio: usize, regime: Regime) -> Option<usize> {
    let row = nd.checked_sub(2).filter(|&r| r < 7)?;
    let rc = TABLE1_RATIOS.iter().position(|&r| r == ratio)?;
    let gc = TABLE1_REGIMES.iter().position(|&g| g == regime)?;
    Some(PUBLISHED_TABLE1[row][2 * rc + gc])
}

/// Table in the published layout; each cell is `measured (published)`.
pub fn format_table1(records: &[ResultRecord]) -> String {
    let mut ratios: Vec<usize> = records.iter().map(|r| r.ratio).collect();
    ratios.sort_unstable();
    ratios.dedup();
    let mut regimes: Vec<Regime> = Vec::new();
    for r in records {
        if !regimes.contains(&r.regime()) {
            regimes.push(r.regime());
        }
    }
    let mut nds: Vec<usize> = records.iter().map(|r| r.nd).collect();
    nds.sort_unstable();
    nds.dedup();

    let width = 14;
    let mut s = String::new();
    let _ = writeln!(s, "Max PCG iterations over time steps, measured (published)");
    let _ = write!(s, "{:<8}", "");
    for &hh in &ratios {
        let label = format!("H/h={hh}");
        let _ = write!(s, "| {:<w$}", label, w = width * regimes.len() - 2);
    }
    let _ = writeln!(s);
    let _ = write!(s, "{:<8}", "");
    for _ in &ratios {
        for g in &regimes {
            let _ = write!(s, "| {:<w$}", format!("nu={}", g.poisson), w = width - 2);
        }
    }
    let _ = writeln!(s);
    let _ = write!(s, "{:<8}", "N");
    for _ in &ratios {
        for g in &regimes {
            let _ = write!(s, "| {:<w$}", format!("k={:e}", g.permeability), w = width - 2);
        }
    }
    let _ = writeln!(s);
    let _ = writeln!(s, "{}", "-".repeat(8 + width * regimes.len() * ratios.len()));
    for &nd in &nds {
        let _ = write!(s, "{:<8}", format!("{nd}x{nd}"));
        for &hh in &ratios {
            for &g in &regimes {
                let cell = records
                    .iter()
                    .find(|r| r.nd == nd && r.ratio == hh && r.regime() == g);
                let measured = match cell {
                    Some(r) if r.converged => r.max_iterations().map_or("-".into(), |v| v.to_string()),
                    Some(_) => "fail".into(),
                    None => "-".into(),
                };
                let text = match published_iterations(nd, hh, g) {
                    Some(p) => format!("{measured} ({p})"),
                    None => measured,
                };
                let _ = write!(s, "| {:<w$}", text, w = width - 2);
            }
        }
        let _ = writeln!(s);
    }
    s
}
