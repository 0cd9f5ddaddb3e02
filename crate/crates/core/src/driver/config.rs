use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use crate::assembly::ModelParams;
use crate::error::{invalid, Error, Result};
use crate::fetidp::Preconditioner;
use crate::mesh::PrimalSpace;

/// Largest mesh for which the monolithic direct solve is attempted.
pub const ORACLE_MAX_M: usize = 32;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Mode {
    Solve,
    OracleCheck,
    Converge,
    Scalability,
}

impl Mode {
    pub const ALL: [Mode; 4] = [Mode::Solve, Mode::OracleCheck, Mode::Converge, Mode::Scalability];

    pub fn name(self) -> &'static str {
        match self {
            Mode::Solve => "solve",
            Mode::OracleCheck => "oracle-check",
            Mode::Converge => "converge",
            Mode::Scalability => "scalability",
        }
    }
}

impl std::fmt::Display for Mode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for Mode {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Mode::ALL
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| invalid(format!("unknown mode '{s}'")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum OutputFormat {
    #[default]
    Csv,
    Json,
}

impl std::str::FromStr for OutputFormat {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "csv" => Ok(OutputFormat::Csv),
            "json" => Ok(OutputFormat::Json),
            _ => Err(invalid(format!("unknown output format '{s}'"))),
        }
    }
}

/// Material pair swept together: (ν, κ).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Regime {
    pub poisson: f64,
    pub permeability: f64,
}

/// The two regimes of the scalability study.
pub const COMPRESSIBLE: Regime = Regime {
    poisson: 0.3,
    permeability: 1e-2,
};
pub const NEARLY_INCOMPRESSIBLE: Regime = Regime {
    poisson: 0.4999,
    permeability: 1e-7,
};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub mode: Mode,
    /// Subdomains per side.
    pub nsub: Vec<usize>,
    /// Elements per subdomain side, H/h.
    pub ratio: Vec<usize>,
    pub regimes: Vec<Regime>,
    pub young: f64,
    pub biot_alpha: f64,
    pub storage: f64,
    pub delta_stab: f64,
    /// Time step; in converge mode, the step on the coarsest mesh.
    pub dt: f64,
    pub t_end: f64,
    pub tol: f64,
    pub max_it: usize,
    pub precond: Preconditioner,
    pub primal: PrimalSpace,
    pub threads: Option<usize>,
    pub out: PathBuf,
    pub format: OutputFormat,
}

impl RunConfig {
    /// Defaults of each mode: the reference parameters with the mesh sets
    /// of the corresponding experiment.
    pub fn for_mode(mode: Mode) -> Self {
        let (nsub, ratio) = match mode {
            Mode::Solve => (vec![2], vec![8]),
            Mode::OracleCheck => (vec![2, 4], vec![4, 8]),
            Mode::Converge => (vec![2], vec![4, 8, 16]),
            Mode::Scalability => ((2..=8).collect(), vec![8, 12, 16]),
        };
        let p = ModelParams::default();
        RunConfig {
            mode,
            nsub,
            ratio,
            regimes: vec![COMPRESSIBLE, NEARLY_INCOMPRESSIBLE],
            young: p.young,
            biot_alpha: p.biot_alpha,
            storage: p.storage,
            delta_stab: p.delta_stab,
            dt: p.dt,
            t_end: p.t_end,
            tol: 1e-8,
            max_it: 1000,
            precond: Preconditioner::Dirichlet,
            primal: PrimalSpace::VerticesAndEdges,
            threads: None,
            out: PathBuf::from("results"),
            format: OutputFormat::Csv,
        }
    }

    /// Model parameters of one regime with time step `dt`.
    pub fn params(&self, regime: Regime, dt: f64) -> ModelParams {
        ModelParams {
            young: self.young,
            poisson: regime.poisson,
            permeability: regime.permeability,
            biot_alpha: self.biot_alpha,
            storage: self.storage,
            delta_stab: self.delta_stab,
            dt,
            t_end: self.t_end,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.nsub.is_empty() || self.ratio.is_empty() || self.regimes.is_empty() {
            return Err(invalid("subdomain, ratio and material lists must be non-empty"));
        }
        if self.nsub.contains(&0) || self.ratio.contains(&0) {
            return Err(invalid("subdomain counts and ratios must be positive"));
        }
        if !(self.tol > 0.0 && self.tol < 1.0) {
            return Err(invalid("tolerance must lie in (0, 1)"));
        }
        if self.max_it == 0 {
            return Err(invalid("iteration limit must be positive"));
        }
        if self.threads == Some(0) {
            return Err(invalid("thread count must be positive"));
        }
        for &r in &self.regimes {
            self.params(r, self.dt).validate()?;
        }
        if self.mode == Mode::OracleCheck {
            for &nd in &self.nsub {
                for &hh in &self.ratio {
                    if nd * hh > ORACLE_MAX_M {
                        return Err(invalid(format!(
                            "oracle check limited to m <= {ORACLE_MAX_M}, got m = {}",
                            nd * hh
                        )));
                    }
                }
            }
        }
        Ok(())
    }
}

/// Parses `2,4,8` or ranges such as `2-8` (inclusive), or a mix.
pub fn parse_usize_list(s: &str) -> Result<Vec<usize>> {
    let mut out = Vec::new();
    for part in s.split(',') {
        let part = part.trim();
        if part.is_empty() {
            return Err(invalid(format!("empty entry in list '{s}'")));
        }
        let num = |t: &str| {
            t.trim()
                .parse::<usize>()
                .map_err(|_| invalid(format!("'{t}' is not a non-negative integer")))
        };
        match part.split_once('-') {
            Some((a, b)) => {
                let (a, b) = (num(a)?, num(b)?);
                if a > b || b - a > 10_000 {
                    return Err(invalid(format!("bad range '{part}'")));
                }
                out.extend(a..=b);
            }
            None => out.push(num(part)?),
        }
    }
    Ok(out)
}

/// Parses a comma-separated list of finite floats.
pub fn parse_f64_list(s: &str) -> Result<Vec<f64>> {
    s.split(',')
        .map(|t| {
            let v: f64 = t
                .trim()
                .parse()
                .map_err(|_| invalid(format!("'{}' is not a number", t.trim())))?;
            if v.is_finite() {
                Ok(v)
            } else {
                Err(invalid(format!("'{}' is not finite", t.trim())))
            }
        })
        .collect()
}

/// Pairs ν and κ lists entry by entry; a single value is broadcast.
pub fn zip_regimes(nu: &[f64], kappa: &[f64]) -> Result<Vec<Regime>> {
    let n = nu.len().max(kappa.len());
    let pick = |v: &[f64], i: usize| if v.len() == 1 { v[0] } else { v[i] };
    if nu.is_empty() || kappa.is_empty() || (nu.len() != n && nu.len() != 1) || (kappa.len() != n && kappa.len() != 1) {
        return Err(invalid(format!(
            "cannot pair {} Poisson ratios with {} permeabilities",
            nu.len(),
            kappa.len()
        )));
    }
    Ok((0..n)
        .map(|i| Regime {
            poisson: pick(nu, i),
            permeability: pick(kappa, i),
        })
        .collect())
}
