//! Command-line surface of the stationarity toolkit: argument parsing,
//! configuration, JSON file formats and the report renderers.

pub mod commands;
pub mod config;
pub mod error;
pub mod formats;
pub mod train;

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

use stattest_core::exact::TestKind;

use crate::config::{OutputFormat, RunConfig};
use crate::error::CliError;

#[derive(Debug, Parser)]
#[command(name = "stattest", version, about = "Stationarity tests for two-layer ReLU networks")]
pub struct Cli {
    /// RunConfig JSON file.
    #[arg(long, env = "STATTEST_CONFIG", global = true)]
    pub config: Option<PathBuf>,
    #[arg(long, value_enum, global = true)]
    pub format: Option<OutputFormat>,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    #[arg(long = "tol-rank", global = true)]
    pub tol_rank: Option<f64>,
    #[arg(long = "tol-qp", global = true)]
    pub tol_qp: Option<f64>,
    #[arg(long = "tol-feas", global = true)]
    pub tol_feas: Option<f64>,
    #[arg(long = "tol-margin", global = true)]
    pub tol_margin: Option<f64>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum KindArg {
    Clarke,
    Frechet,
}

impl From<KindArg> for TestKind {
    fn from(k: KindArg) -> Self {
        match k {
            KindArg::Clarke => TestKind::Clarke,
            KindArg::Frechet => TestKind::Frechet,
        }
    }
}

#[derive(Debug, Clone, Args)]
pub struct ProblemArgs {
    #[arg(long)]
    pub net: PathBuf,
    #[arg(long)]
    pub data: PathBuf,
    #[arg(long)]
    pub loss: PathBuf,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Exact Clarke or Frechet stationarity test.
    Exact {
        #[arg(long, value_enum)]
        kind: KindArg,
        #[command(flatten)]
        problem: ProblemArgs,
    },
    /// Robust test with a halving line search over the rounding radius.
    Robust {
        #[arg(long, value_enum)]
        kind: KindArg,
        #[command(flatten)]
        problem: ProblemArgs,
        #[arg(long, default_value_t = 1.0)]
        delta0: f64,
        #[arg(long, default_value_t = 64)]
        max_iters: usize,
    },
    /// 3SAT reductions: generate, check and test abs-normal forms.
    Hardness {
        #[command(subcommand)]
        command: HardnessCommand,
    },
    /// Brute-force oracles.
    Oracle {
        #[command(subcommand)]
        command: OracleCommand,
    },
    /// Subgradient training terminated by the robust test.
    Train(train::TrainArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum CheckMode {
    Exhaustive,
    Certificate,
    Both,
}

#[derive(Debug, Subcommand)]
pub enum HardnessCommand {
    /// Write the PLT instance of a DIMACS formula (or of a random one).
    Gen {
        #[arg(long, conflicts_with_all = ["random_vars", "random_clauses"])]
        cnf: Option<PathBuf>,
        #[arg(long, requires = "random_clauses")]
        random_vars: Option<usize>,
        #[arg(long, requires = "random_vars")]
        random_clauses: Option<usize>,
        /// PLT JSON output; printed when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        anf_out: Option<PathBuf>,
        #[arg(long)]
        dimacs_out: Option<PathBuf>,
    },
    /// Decide satisfiability and PLT stationarity and check they complement.
    Check {
        #[arg(long)]
        cnf: PathBuf,
        #[arg(long, value_enum, default_value_t = CheckMode::Both)]
        mode: CheckMode,
        #[arg(long, default_value_t = 0.0)]
        eps: f64,
    },
    /// First-order minimality of an abs-normal form by signature enumeration.
    Anft {
        #[arg(long, conflicts_with_all = ["plt", "cnf"])]
        anf: Option<PathBuf>,
        #[arg(long, conflicts_with = "cnf")]
        plt: Option<PathBuf>,
        #[arg(long)]
        cnf: Option<PathBuf>,
    },
}

#[derive(Debug, Subcommand)]
pub enum OracleCommand {
    /// Compare the chain-rule tests with the cell-enumeration oracles.
    Compare {
        #[command(flatten)]
        problem: ProblemArgs,
    },
}

/// Rendered command output with its exit code.
#[derive(Debug, Clone)]
pub struct Report {
    pub code: u8,
    pub text: String,
    pub json: serde_json::Value,
}

impl Report {
    pub fn render(&self, format: OutputFormat) -> String {
        match format {
            OutputFormat::Text => self.text.clone(),
            OutputFormat::Json => {
                let mut s = serde_json::to_string_pretty(&self.json).unwrap_or_default();
                s.push('\n');
                s
            }
        }
    }
}

/// Resolves the configuration: defaults, then the config file, then flags.
pub fn resolve_config(cli: &Cli) -> Result<RunConfig, CliError> {
    let mut cfg = match &cli.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    if let Some(f) = cli.format {
        cfg.format = f;
    }
    if let Some(s) = cli.seed {
        cfg.seed = s;
    }
    let t = &mut cfg.tolerances;
    for (slot, flag) in [
        (&mut t.rank_rel_tol, cli.tol_rank),
        (&mut t.qp_tol, cli.tol_qp),
        (&mut t.feas_tol, cli.tol_feas),
        (&mut t.margin_tol, cli.tol_margin),
    ] {
        if let Some(v) = flag {
            *slot = v;
        }
    }
    cfg.validate()?;
    Ok(cfg)
}

pub fn execute(cli: &Cli, cfg: &RunConfig) -> Result<Report, CliError> {
    match &cli.command {
        Command::Exact { kind, problem } => commands::exact(cfg, (*kind).into(), problem),
        Command::Robust {
            kind,
            problem,
            delta0,
            max_iters,
        } => commands::robust(cfg, (*kind).into(), problem, *delta0, *max_iters),
        Command::Hardness { command } => commands::hardness(cfg, command),
        Command::Oracle {
            command: OracleCommand::Compare { problem },
        } => commands::oracle_compare(cfg, problem),
        Command::Train(args) => train::run(cfg, args),
    }
}

/// Runs a parsed command line; returns the exit code and what to print on
/// stdout and stderr.
pub fn run(cli: &Cli) -> (u8, String, String) {
    let cfg = match resolve_config(cli) {
        Ok(cfg) => cfg,
        Err(e) => return (e.exit_code(), String::new(), format!("{e}\n")),
    };
    match execute(cli, &cfg) {
        Ok(report) => (report.code, report.render(cfg.format), String::new()),
        Err(e) => (e.exit_code(), String::new(), format!("{e}\n")),
    }
}
