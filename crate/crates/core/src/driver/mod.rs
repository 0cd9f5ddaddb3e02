//! Time stepping, the experiment modes behind the CLI and their outputs.

mod config;
mod records;
mod run;

pub use config::{
    parse_f64_list, parse_usize_list, zip_regimes, Mode, OutputFormat, Regime, RunConfig, COMPRESSIBLE,
    NEARLY_INCOMPRESSIBLE, ORACLE_MAX_M,
};
pub use records::{
    format_table1, published_iterations, read_results_json, write_csv, write_json, ResultRecord, Timings,
    PUBLISHED_TABLE1, SCHEMA_VERSION, TABLE1_RATIOS, TABLE1_REGIMES,
};
pub use run::{
    convergence_checks, preconditioner_checks, relative_difference, run, run_convergence, run_oracle_check,
    run_scalability, run_solve, table1_checks, write_outputs, Check, Dumps, RunOptions, RunOutput,
    FLATNESS_SPREAD, INCOMPRESSIBLE_GROWTH, MIN_RATES, ORACLE_TOL, PUBLISHED_FACTOR,
};
