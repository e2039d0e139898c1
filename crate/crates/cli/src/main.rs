//! `ducc`: cost-concentration analysis of alternated disentangled UCC ansatze.

mod commands;
mod config;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use config::{Format, RunConfig};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("usage: {0}")]
    Usage(String),
    #[error("{0}")]
    Core(#[from] ducc_core::Error),
    #[error("validation failed: {0}")]
    Validation(String),
    #[error("io: {0}")]
    Io(String),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 2,
            _ => 1,
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "ducc", version, about = "Moments and variance asymptotics of alternated dUCC ansatze")]
struct Cli {
    #[command(flatten)]
    global: GlobalArgs,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
struct GlobalArgs {
    /// TOML (or .json) file with defaults; flags override it.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Omit the timestamp header so repeated runs are byte-identical.
    #[arg(long, global = true)]
    deterministic: bool,
    /// Write to this file instead of stdout.
    #[arg(long, short, global = true)]
    output: Option<PathBuf>,
    #[arg(long, global = true, value_enum)]
    format: Option<Format>,
    /// Worker threads for sampling (default: available parallelism).
    #[arg(long, global = true)]
    workers: Option<usize>,
}

#[derive(Debug, Args)]
struct Problem {
    /// Ansatz family, e.g. uccs, uccsd, quccs, bra, upccgsd.
    #[arg(long)]
    class: Option<String>,
    /// AnsatzSpec JSON file, instead of --class.
    #[arg(long)]
    spec: Option<PathBuf>,
    #[arg(long)]
    n: Option<usize>,
    /// Electron count (default n/2).
    #[arg(long)]
    eta: Option<usize>,
    /// Observable term `h:p,q[=c]` or `g:p,q,r,s[=c]`; repeatable.
    #[arg(long = "term")]
    terms: Vec<String>,
    /// Hamiltonian JSON file, instead of --term.
    #[arg(long)]
    hamiltonian: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Infinite-depth variance from the closed forms.
    Asymptotic(Problem),
    /// Distances to the limit vector over a range of depths.
    Converge {
        #[command(flatten)]
        problem: Problem,
        /// Depths, e.g. 1..100.
        #[arg(long)]
        k_range: Option<String>,
        /// Moment order (1 or 2).
        #[arg(long)]
        t: Option<u32>,
        /// Report only this distance (l1, l2 or linf).
        #[arg(long)]
        norm: Option<String>,
    },
    /// Monte Carlo estimates of the cost variance.
    Mc {
        #[command(flatten)]
        problem: Problem,
        /// Orbital counts, e.g. 4..12:4.
        #[arg(long)]
        n_range: Option<String>,
        #[arg(long)]
        k: Option<usize>,
        #[arg(long)]
        samples: Option<usize>,
        /// Append an a·exp(b·n) fit over the estimates.
        #[arg(long)]
        fit: bool,
    },
    /// Compare closed-form projectors against quadrature on random inputs.
    OracleDiff {
        #[arg(long)]
        trials: Option<usize>,
        #[arg(long)]
        t: Option<u32>,
        /// Corrupt the closed-form output (negative control).
        #[arg(long, hide = true)]
        perturb: bool,
    },
}

fn problem_layer(p: Problem) -> RunConfig {
    RunConfig {
        class: p.class,
        spec: p.spec,
        n: p.n,
        eta: p.eta,
        terms: (!p.terms.is_empty()).then_some(p.terms),
        hamiltonian: p.hamiltonian,
        ..Default::default()
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    let g = cli.global;
    let mut flags = RunConfig {
        seed: g.seed,
        deterministic: g.deterministic.then_some(true),
        output: g.output,
        format: g.format,
        workers: g.workers,
        ..Default::default()
    };
    let mut perturb = false;
    let name = match cli.command {
        Command::Asymptotic(p) => {
            flags = flags.over(problem_layer(p));
            "asymptotic"
        }
        Command::Converge { problem, k_range, t, norm } => {
            flags = flags.over(problem_layer(problem)).over(RunConfig { k_range, t, norm, ..Default::default() });
            "converge"
        }
        Command::Mc { problem, n_range, k, samples, fit } => {
            let extra = RunConfig { n_range, k, samples, fit: fit.then_some(true), ..Default::default() };
            flags = flags.over(problem_layer(problem)).over(extra);
            "mc"
        }
        Command::OracleDiff { trials, t, perturb: p } => {
            perturb = p;
            flags = flags.over(RunConfig { trials, t, ..Default::default() });
            "oracle-diff"
        }
    };
    let file = match &g.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    if let Some(cmd) = &file.command {
        if cmd != name {
            return Err(CliError::Usage(format!("config file is for '{cmd}', not '{name}'")));
        }
    }
    let mut cfg = flags.over(file);
    cfg.command = Some(name.to_string());
    if let Some(w) = cfg.workers {
        if w == 0 {
            return Err(CliError::Usage("--workers must be at least 1".into()));
        }
        rayon::ThreadPoolBuilder::new().num_threads(w).build_global().map_err(|e| CliError::Io(e.to_string()))?;
    }
    match name {
        "asymptotic" => commands::asymptotic(&cfg),
        "converge" => commands::converge(&cfg),
        "mc" => commands::mc(&cfg),
        _ => commands::oracle_diff(&cfg, perturb),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
