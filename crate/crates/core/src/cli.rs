//! Command-line front end: scenario solves, figure sweeps, and mesh
//! cross-checks, all emitting JSON (sweeps additionally write CSV).
//!
//! Exit codes: 0 success, 1 infeasible scenario, 2 bad input or internal
//! failure.

use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};
use serde::Serialize;

use crate::data_max::solve_p2;
use crate::energy_min::solve_p1;
use crate::oracle::{oracle_p1, oracle_p2, MeshSpec};
use crate::simharness::{random_scenario, run_sweep, SweepConfig};
use crate::system_model::SystemParams;
use crate::{Error, Result};

#[derive(Parser)]
#[command(
    name = "comec",
    version,
    about = "Energy and throughput optimizers for cooperative NOMA edge offloading"
)]
struct Cli {
    /// Seed for generated scenarios; falls back to the MEC_SEED environment
    /// variable, then 0.
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Minimize weighted energy for a scenario file.
    SolveP1 {
        /// Scenario JSON path.
        #[arg(long)]
        scenario: PathBuf,
        /// Slot-split grid resolution.
        #[arg(long, default_value_t = 201)]
        alpha_grid: usize,
    },
    /// Maximize weighted offloaded data for a scenario file.
    SolveP2 {
        /// Scenario JSON path.
        #[arg(long)]
        scenario: PathBuf,
    },
    /// Run a registered figure sweep and write its CSV.
    Sweep {
        /// Sweep config JSON path.
        #[arg(long)]
        config: PathBuf,
        /// Output CSV path.
        #[arg(long)]
        out: PathBuf,
    },
    /// Compare a solver against the brute-force mesh on one scenario.
    OracleCheck {
        /// Scenario JSON path; a seeded random scenario when absent.
        #[arg(long)]
        scenario: Option<PathBuf>,
        /// Which problem to check.
        #[arg(long, value_parser = ["p1", "p2"])]
        problem: String,
        /// Mesh points per axis (defaults per problem).
        #[arg(long)]
        mesh: Option<usize>,
    },
}

/// Entry point for the `comec` binary; returns the process exit code.
pub fn cli() -> i32 {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            match e {
                Error::Infeasible(_) | Error::AllInfeasible | Error::CaseInfeasible(_) => 1,
                _ => 2,
            }
        }
    }
}

fn run(cli: Cli) -> Result<()> {
    let seed = resolve_seed(cli.seed)?;
    match cli.cmd {
        Cmd::SolveP1 { scenario, alpha_grid } => {
            let p = load_scenario(&scenario)?;
            emit(&solve_p1(&p, alpha_grid)?)
        }
        Cmd::SolveP2 { scenario } => {
            let p = load_scenario(&scenario)?;
            emit(&solve_p2(&p)?)
        }
        Cmd::Sweep { config, out } => {
            let cfg = SweepConfig::from_json(&read_file(&config)?)?;
            let res = run_sweep(&cfg)?;
            std::fs::write(&out, res.to_csv()).map_err(|e| {
                Error::InvalidConfig(format!("writing {}: {e}", out.display()))
            })?;
            #[derive(Serialize)]
            struct SweepSummary<'a> {
                figure_id: &'a str,
                axis_name: &'a str,
                rows: usize,
                out: String,
            }
            emit(&SweepSummary {
                figure_id: &res.figure_id,
                axis_name: res.axis_name,
                rows: res.rows.len(),
                out: out.display().to_string(),
            })
        }
        Cmd::OracleCheck { scenario, problem, mesh } => {
            let p = match scenario {
                Some(path) => load_scenario(&path)?,
                None => random_scenario(seed),
            };
            let (solver_value, mut spec) = match problem.as_str() {
                "p1" => (solve_p1(&p, 201)?.weighted_energy, MeshSpec::p1_default()),
                _ => (solve_p2(&p)?.weighted_bits, MeshSpec::p2_default()),
            };
            if let Some(k) = mesh {
                spec.points_per_axis = k;
            }
            let oracle = match problem.as_str() {
                "p1" => oracle_p1(&p, &spec)?,
                _ => oracle_p2(&p, &spec)?,
            };
            #[derive(Serialize)]
            struct CheckReport {
                problem: String,
                scenario: SystemParams,
                solver_value: f64,
                oracle_value: f64,
                rel_gap: f64,
                mesh_error: f64,
            }
            let rel_gap = (solver_value - oracle.value).abs() / oracle.value.abs().max(1e-300);
            emit(&CheckReport {
                problem,
                scenario: p,
                solver_value,
                oracle_value: oracle.value,
                rel_gap,
                mesh_error: oracle.mesh_error,
            })
        }
    }
}

fn resolve_seed(flag: Option<u64>) -> Result<u64> {
    if let Some(s) = flag {
        return Ok(s);
    }
    match std::env::var("MEC_SEED") {
        Ok(text) => text
            .trim()
            .parse()
            .map_err(|_| Error::InvalidConfig(format!("MEC_SEED is not a u64: {text:?}"))),
        Err(_) => Ok(0),
    }
}

fn read_file(path: &Path) -> Result<String> {
    std::fs::read_to_string(path)
        .map_err(|e| Error::InvalidConfig(format!("reading {}: {e}", path.display())))
}

fn load_scenario(path: &Path) -> Result<SystemParams> {
    SystemParams::from_json(&read_file(path)?)
}

fn emit<T: Serialize>(value: &T) -> Result<()> {
    let text = serde_json::to_string_pretty(value)
        .map_err(|e| Error::InvalidConfig(format!("serializing report: {e}")))?;
    println!("{text}");
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use clap::CommandFactory;

    #[test]
    fn arg_grammar_is_consistent() {
        Cli::command().debug_assert();
    }

    #[test]
    fn subcommand_names_are_kebab_case() {
        let cmd = Cli::command();
        let names: Vec<_> = cmd.get_subcommands().map(|c| c.get_name().to_string()).collect();
        for expected in ["solve-p1", "solve-p2", "sweep", "oracle-check"] {
            assert!(names.iter().any(|n| n == expected), "missing {expected} in {names:?}");
        }
    }

    #[test]
    fn seed_flag_beats_default() {
        assert_eq!(resolve_seed(Some(9)).unwrap(), 9);
    }
}
