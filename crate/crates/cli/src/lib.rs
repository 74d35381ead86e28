//! Command-line driver: loads a problem, runs one operation and writes
//! JSON/CSV artifacts.

pub mod config;
mod json;

use std::path::PathBuf;

use clap::{Parser, Subcommand};
use levelset_core::minimax::{linspace, MinimaxInstance};
use levelset_core::search::LimitOptions;
use levelset_core::{
    bank, compute_gamma_delta, compute_window, continuity_scan, limit_at_zero, minimizing_sequences_for,
    solve_level_auto, solve_level_dual, trace_curve, verify_minimax, Error, MinimaxVerdict, Point, SequenceParams,
    SolverOptions, WellPosedVerdict,
};
use serde::Serialize;
use serde_json::json;

pub use json::to_json;

#[derive(Debug, Parser)]
#[command(name = "levelset", version, about = "Level-set constrained minimization on the multiplier curve")]
pub struct Cli {
    /// Built-in problem name or path to a JSON config.
    #[arg(long, global = true)]
    pub problem: Option<String>,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Worker threads for parallel operations.
    #[arg(long, global = true)]
    pub jobs: Option<usize>,
    /// Absolute constraint tolerance (`r_tol`).
    #[arg(long, global = true)]
    pub tol: Option<f64>,
    /// Directory receiving `<subcommand>.json` and CSV tables.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Feasibility window ]alpha, beta[.
    Window,
    /// Dual window ]gamma, delta[.
    DualWindow,
    /// Multiplier curve samples as CSV.
    Curve {
        /// Comma-separated, strictly increasing multipliers.
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true, required = true)]
        grid: Vec<f64>,
    },
    /// Minimize J over Phi = r.
    Solve {
        #[arg(long, allow_negative_numbers = true)]
        r: f64,
    },
    /// Minimize Phi over J = r.
    DualSolve {
        #[arg(long, allow_negative_numbers = true)]
        r: f64,
    },
    /// Brute-force minimax check of the saddle function at level r.
    VerifyMinimax {
        #[arg(long, allow_negative_numbers = true)]
        r: f64,
        /// `lo:hi:n` per coordinate; ignored on finite problems.
        #[arg(long, value_parser = parse_range, allow_hyphen_values = true)]
        x_grid: Option<(f64, f64, usize)>,
        /// `lo:hi:n`.
        #[arg(long, value_parser = parse_range, allow_hyphen_values = true)]
        lambda_grid: (f64, f64, usize),
    },
    /// Minimizing-sequence diagnostics at level r.
    Wellposed {
        #[arg(long, allow_negative_numbers = true)]
        r: f64,
        #[arg(long, default_value_t = 32)]
        trials: usize,
        #[arg(long, default_value_t = 500)]
        horizon: usize,
        #[arg(long, default_value_t = 1e-7)]
        seq_eps: f64,
        #[arg(long, default_value_t = 1e-3)]
        seq_delta: f64,
    },
    /// Solutions across the trimmed window.
    Scan {
        #[arg(long, default_value_t = 9)]
        points: usize,
        #[arg(long, default_value_t = 0.05)]
        margin: f64,
    },
    /// Limit of Phi(y_lambda) as lambda -> 0+.
    LimitZero {
        #[arg(long)]
        lambda0: Option<f64>,
        #[arg(long, default_value_t = 20)]
        steps: usize,
        #[arg(long, default_value_t = 0.5)]
        ratio: f64,
    },
    /// List the built-in problems.
    Problems,
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Window => "window",
            Command::DualWindow => "dual-window",
            Command::Curve { .. } => "curve",
            Command::Solve { .. } => "solve",
            Command::DualSolve { .. } => "dual-solve",
            Command::VerifyMinimax { .. } => "verify-minimax",
            Command::Wellposed { .. } => "wellposed",
            Command::Scan { .. } => "scan",
            Command::LimitZero { .. } => "limit-zero",
            Command::Problems => "problems",
        }
    }
}

fn parse_range(s: &str) -> Result<(f64, f64, usize), String> {
    let parts: Vec<&str> = s.split(':').collect();
    let [lo, hi, n] = parts.as_slice() else {
        return Err("expected lo:hi:n".into());
    };
    let lo: f64 = lo.parse().map_err(|e| format!("lo: {e}"))?;
    let hi: f64 = hi.parse().map_err(|e| format!("hi: {e}"))?;
    let n: usize = n.parse().map_err(|e| format!("n: {e}"))?;
    if !(lo.is_finite() && hi.is_finite() && lo < hi && n >= 2) {
        return Err("need finite lo < hi and n >= 2".into());
    }
    Ok((lo, hi, n))
}

#[derive(Debug)]
pub enum CliError {
    Config { key: String, message: String },
    Core(Error),
    /// A core error raised while reading a config key.
    Keyed { key: String, error: Error },
    Io(String),
}

impl CliError {
    pub fn code(&self) -> &'static str {
        match self {
            CliError::Config { .. } => "ConfigError",
            CliError::Core(e) | CliError::Keyed { error: e, .. } => e.code(),
            CliError::Io(_) => "Io",
        }
    }

    fn message(&self) -> String {
        match self {
            CliError::Config { key, message } if key.is_empty() => message.clone(),
            CliError::Config { key, message } => format!("{key}: {message}"),
            CliError::Core(e) => e.to_string(),
            CliError::Keyed { key, error } => format!("{key}: {error}"),
            CliError::Io(m) => m.clone(),
        }
    }

    fn exit_code(&self) -> u8 {
        match self {
            CliError::Core(e) if e.is_hypothesis_failure() => 2,
            _ => 1,
        }
    }

    fn to_json(&self) -> serde_json::Value {
        let mut body = json!({ "code": self.code(), "message": self.message() });
        match self {
            CliError::Config { key, .. } | CliError::Keyed { key, .. } => body["key"] = json!(key),
            CliError::Core(Error::BracketFailure { samples, .. }) => body["samples"] = json!(samples),
            _ => {}
        }
        json!({ "error": body })
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}: {}", self.code(), self.message())
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        CliError::Core(e)
    }
}

/// Result of one invocation. The first artifact is echoed to stdout.
pub struct Outcome {
    pub exit_code: u8,
    pub artifacts: Vec<(String, Vec<u8>)>,
    pub diagnostics: Vec<String>,
}

struct Report {
    artifacts: Vec<(String, Vec<u8>)>,
    falsified: bool,
    diagnostics: Vec<String>,
}

impl Report {
    fn json<T: Serialize>(name: &str, value: &T) -> Self {
        Report {
            artifacts: vec![(format!("{name}.json"), to_json(value))],
            falsified: false,
            diagnostics: Vec::new(),
        }
    }

    fn falsified_if(mut self, flag: bool, why: impl Into<String>) -> Self {
        if flag {
            self.falsified = true;
            self.diagnostics.push(why.into());
        }
        self
    }
}

pub fn run(cli: &Cli) -> Outcome {
    let name = cli.command.name();
    match execute(cli) {
        Ok(report) => Outcome {
            exit_code: if report.falsified { 2 } else { 0 },
            artifacts: report.artifacts,
            diagnostics: report.diagnostics,
        },
        Err(e) => Outcome {
            exit_code: e.exit_code(),
            artifacts: vec![(format!("{name}.json"), to_json(&e.to_json()))],
            diagnostics: vec![e.to_string()],
        },
    }
}

fn execute(cli: &Cli) -> Result<Report, CliError> {
    if let Command::Problems = cli.command {
        let list: Vec<_> = bank::NAMES
            .iter()
            .map(|n| json!({ "name": n, "description": bank::describe(n) }))
            .collect();
        return Ok(Report::json("problems", &list));
    }
    let spec = cli
        .problem
        .as_deref()
        .ok_or_else(|| CliError::Config {
            key: "--problem".into(),
            message: "required for this subcommand".into(),
        })?;
    let loaded = config::load(spec)?;
    let problem = loaded.problem;
    let seed = cli.seed.or(loaded.seed).unwrap_or(0);
    let opts = SolverOptions {
        r_tol: cli.tol.or(loaded.options.r_tol),
        ..loaded.options
    };
    let budget = opts.probe_budget;

    Ok(match &cli.command {
        Command::Problems => unreachable!("handled above"),
        Command::Window => Report::json("window", &compute_window(&problem, budget, seed, &opts)?),
        Command::DualWindow => Report::json("dual-window", &compute_gamma_delta(&problem, budget, seed, &opts)?),
        Command::Curve { grid } => {
            let curve = trace_curve(&problem, grid, seed, &opts)?;
            let mut csv = Vec::new();
            curve.write_csv(&mut csv)?;
            let warnings = curve.warnings.len();
            let mut report = Report {
                artifacts: vec![("curve.csv".into(), csv), ("curve.json".into(), to_json(&curve))],
                falsified: false,
                diagnostics: Vec::new(),
            };
            report = report.falsified_if(warnings > 0, format!("{warnings} monotonicity violations"));
            report
        }
        Command::Solve { r } => {
            let s = solve_level_auto(&problem, *r, seed, &opts)?;
            let warnings = s.warnings.clone();
            let mut report = Report::json("solve", &s);
            report.diagnostics = warnings;
            report
        }
        Command::DualSolve { r } => {
            let s = solve_level_dual(&problem, *r, seed, &opts)?;
            let warnings = s.warnings.clone();
            let mut report = Report::json("dual-solve", &s);
            report.diagnostics = warnings;
            report
        }
        Command::VerifyMinimax { r, x_grid, lambda_grid } => {
            let points = match problem.table_len() {
                Some(n) => (0..n).map(Point::Index).collect(),
                None => {
                    let grid = x_grid.ok_or_else(|| CliError::Config {
                        key: "--x-grid".into(),
                        message: "required on continuous domains".into(),
                    })?;
                    tensor_grid(grid, problem.domain().dimension().unwrap_or(1))?
                }
            };
            let lambdas = linspace(lambda_grid.0, lambda_grid.1, lambda_grid.2);
            let interval = problem.interval();
            if let Some(l) = lambdas.iter().find(|l| !interval.contains(**l)) {
                return Err(Error::InvalidArgument(format!(
                    "lambda {l} of the grid lies outside ]{}, {}[",
                    interval.a(),
                    interval.b()
                ))
                .into());
            }
            let instance = MinimaxInstance::saddle(&problem, *r, points, lambdas)?;
            let report = verify_minimax(&instance)?;
            let verdict = report.verdict;
            Report::json("verify-minimax", &report)
                .falsified_if(verdict != MinimaxVerdict::EqualityHolds, format!("verdict {verdict:?}"))
        }
        Command::Wellposed {
            r,
            trials,
            horizon,
            seq_eps,
            seq_delta,
        } => {
            let s = solve_level_auto(&problem, *r, seed, &opts)?;
            let params = SequenceParams {
                trial_count: *trials,
                horizon: *horizon,
                seq_eps: *seq_eps,
                seq_delta: *seq_delta,
            };
            let rep = minimizing_sequences_for(&problem, &s, params, seed, &opts)?;
            let fail = rep.verdict == WellPosedVerdict::Fail;
            Report::json("wellposed", &rep).falsified_if(fail, "well-posedness verdict fail")
        }
        Command::Scan { points, margin } => {
            let scan = continuity_scan(&problem, *points, *margin, seed, &opts)?;
            let mut csv = Vec::new();
            scan.write_csv(&mut csv)?;
            let monotone = scan.lambda_non_increasing;
            let mut report = Report::json("scan", &scan);
            report.artifacts.push(("scan.csv".into(), csv));
            report.falsified_if(!monotone, "lambda_hat increases along the scan")
        }
        Command::LimitZero { lambda0, steps, ratio } => {
            let limit = LimitOptions {
                lambda0: *lambda0,
                ratio: *ratio,
                steps: *steps,
            };
            let rep = limit_at_zero(&problem, seed, &opts, limit)?;
            let below = rep.below_sup_phi;
            Report::json("limit-zero", &rep).falsified_if(below == Some(false), "limit is not below sup Phi")
        }
    })
}

const MAX_GRID_POINTS: usize = 4_000_000;

fn tensor_grid((lo, hi, n): (f64, f64, usize), dim: usize) -> Result<Vec<Point>, CliError> {
    let total = (0..dim).try_fold(1usize, |acc, _| acc.checked_mul(n));
    if total.is_none_or(|t| t > MAX_GRID_POINTS) {
        return Err(Error::InvalidArgument(format!(
            "x-grid with {n}^{dim} points exceeds {MAX_GRID_POINTS}"
        ))
        .into());
    }
    let axis = linspace(lo, hi, n);
    let mut points = vec![Vec::with_capacity(dim)];
    for _ in 0..dim {
        points = points
            .into_iter()
            .flat_map(|p| {
                axis.iter().map(move |&v| {
                    let mut q = p.clone();
                    q.push(v);
                    q
                })
            })
            .collect();
    }
    Ok(points.into_iter().map(Point::Vector).collect())
}
