//! Command-line front end. [`run`] returns the exit status and the text for
//! standard output, so it can be exercised without spawning a process.

use std::io::Read;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::Value;

use crate::error::{Error, ErrorKind};
use crate::game::{compute_ne, critical_components, equilibrium_quantities, pure_ne_check, verify_ne};
use crate::greedy::{lift_to_distribution, SolveOptions};
use crate::io::{self, Render, EMPTY_KEY};
use crate::network::DEFAULT_PATH_CAP;
use crate::oracle::brute_force_q;
use crate::poset::DEFAULT_CHAIN_CAP;

#[derive(Debug, Parser)]
#[command(
    name = "posetgame",
    version,
    about = "Exact subset distributions over posets and interdiction game equilibria"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    #[command(flatten)]
    pub common: CommonArgs,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    /// Exact `num/den` strings.
    Json,
    /// Decimal strings for reading.
    Pretty,
}

#[derive(Debug, Args)]
pub struct CommonArgs {
    /// Output format.
    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    pub format: Format,
    /// Include per-round solver state.
    #[arg(long, global = true)]
    pub trace: bool,
    /// Cross-check the result with the brute-force oracle.
    #[arg(long, global = true)]
    pub oracle: bool,
    /// Maximum number of maximal chains to materialize.
    #[arg(long, global = true, default_value_t = DEFAULT_CHAIN_CAP)]
    pub chain_cap: usize,
    /// Maximum number of s-t paths to materialize.
    #[arg(long, global = true, default_value_t = DEFAULT_PATH_CAP)]
    pub path_cap: usize,
    /// Key written for the empty subset.
    #[arg(long, global = true, default_value = EMPTY_KEY)]
    pub empty_key: String,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Minimum-weight subset solution and the distribution built from it.
    PosetSolve {
        /// Problem JSON, or `-` for standard input.
        input: PathBuf,
        /// Require affine chain values.
        #[arg(long)]
        affine: bool,
    },
    /// Check the chain conditions, and optionally a solution.
    PosetVerify {
        input: PathBuf,
        /// Output of `poset-solve` to audit against the problem.
        #[arg(long)]
        solution: Option<PathBuf>,
    },
    /// Mixed equilibrium of the interdiction game.
    GameSolve { input: PathBuf },
    /// Best-response gaps of a strategy profile.
    GameVerify {
        network: PathBuf,
        /// Profile JSON with `flow` and `interdiction` maps.
        profile: PathBuf,
    },
    /// Paths and edges used by some equilibrium.
    GameCritical { input: PathBuf },
    /// Flow, cost and interdiction totals at the computed equilibrium.
    GameQuantities { input: PathBuf },
    /// Whether an equilibrium without interdiction exists.
    PureNe { input: PathBuf },
}

fn read_input(path: &Path) -> Result<String, Error> {
    if path.as_os_str() == "-" {
        let mut s = String::new();
        std::io::stdin().read_to_string(&mut s)?;
        Ok(s)
    } else {
        std::fs::read_to_string(path)
            .map_err(|e| Error::Io(std::io::Error::new(e.kind(), format!("{}: {e}", path.display()))))
    }
}

/// Result of one invocation.
#[derive(Debug)]
pub struct Outcome {
    pub code: i32,
    pub stdout: String,
    pub stderr: String,
}

fn render(common: &CommonArgs) -> Render {
    Render { decimals: (common.format == Format::Pretty).then_some(12), empty_key: common.empty_key.clone() }
}

fn dump(v: &Value) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("json values serialize");
    s.push('\n');
    s
}

pub fn run(cli: &Cli) -> Outcome {
    match dispatch(cli) {
        Ok((code, value, note)) => Outcome { code, stdout: dump(&value), stderr: note },
        Err(e) => Outcome { code: e.exit_code(), stdout: String::new(), stderr: format!("error: {e}\n") },
    }
}

fn dispatch(cli: &Cli) -> Result<(i32, Value, String), Error> {
    let c = &cli.common;
    let r = render(c);
    let opts = SolveOptions { trace: c.trace, check_invariants: false, chain_cap: c.chain_cap };
    let violated = ErrorKind::ConditionsViolated.exit_code();
    match &cli.command {
        Command::PosetSolve { input, affine } => {
            let problem = io::parse_problem(&read_input(input)?, c.chain_cap)?;
            let sol = io::solve_problem(&problem, &opts, *affine)?;
            let mut out = io::solution_json(&problem, &sol, &r)?;
            let mut code = 0;
            let mut note = String::new();
            if c.oracle {
                let oracle = brute_force_q(&problem, c.chain_cap)?;
                if oracle.optimum != sol.total {
                    code = ErrorKind::Internal.exit_code();
                    note = format!("oracle optimum {} differs from solver total {}\n", oracle.optimum, sol.total);
                }
                out["oracle"] = io::oracle_json(&oracle, &sol.total, &r);
            }
            Ok((code, out, note))
        }
        Command::PosetVerify { input, solution } => {
            let problem = io::parse_problem(&read_input(input)?, c.chain_cap)?;
            let report = problem.verify_conditions()?;
            let mut out = io::report_json(&problem, &report, &r);
            let mut ok = report.ok();
            let mut note = String::new();
            if !report.necessary_ok {
                note.push_str("chain slack condition violated\n");
            }
            if !report.conservation_ok {
                note.push_str("conservation condition violated\n");
            }
            if let Some(path) = solution {
                let sigma = io::parse_solution(&read_input(path)?, &problem, &c.empty_key)?;
                let mut problems = problem.audit_q_solution(&sigma, c.chain_cap)?;
                let total = sigma.total();
                match lift_to_distribution(&sigma, &total) {
                    Ok(lifted) => problems.extend(problem.audit_distribution(&lifted, c.chain_cap)?),
                    Err(e) => problems.push(e.to_string()),
                }
                ok &= problems.is_empty();
                out["solution"] = serde_json::json!({ "feasible": problems.is_empty(), "problems": problems });
            }
            Ok((if ok { 0 } else { violated }, out, note))
        }
        Command::GameSolve { input } => {
            let net = io::parse_network(&read_input(input)?)?;
            let eq = compute_ne(&net)?;
            let mut out = io::equilibrium_json(&net, &eq, &r);
            let mut code = 0;
            let mut note = eq.warnings.iter().map(|w| format!("warning: {w}\n")).collect::<String>();
            if c.oracle {
                let report = verify_ne(&net, &eq.profile, c.path_cap)?;
                if !report.is_ne {
                    code = ErrorKind::Internal.exit_code();
                    note.push_str("oracle found a profitable deviation\n");
                }
                out["verification"] = io::ne_report_json(&net, &report, &r);
            }
            Ok((code, out, note))
        }
        Command::GameVerify { network, profile } => {
            let net = io::parse_network(&read_input(network)?)?;
            let profile = io::parse_profile(&read_input(profile)?, &net, &c.empty_key)?;
            let report = verify_ne(&net, &profile, c.path_cap)?;
            let code = if report.is_ne { 0 } else { violated };
            let note = if report.is_ne { String::new() } else { "profile is not an equilibrium\n".into() };
            Ok((code, io::ne_report_json(&net, &report, &r), note))
        }
        Command::GameCritical { input } => {
            let net = io::parse_network(&read_input(input)?)?;
            let crit = critical_components(&net, c.path_cap)?;
            Ok((0, io::critical_json(&net, &crit), String::new()))
        }
        Command::GameQuantities { input } => {
            let net = io::parse_network(&read_input(input)?)?;
            let eq = compute_ne(&net)?;
            Ok((0, io::quantities_json(&equilibrium_quantities(&eq, &net), &r), String::new()))
        }
        Command::PureNe { input } => {
            let net = io::parse_network(&read_input(input)?)?;
            let pure = pure_ne_check(&net, c.path_cap)?;
            Ok((0, io::pure_json(&net, &pure, &r), String::new()))
        }
    }
}
