mod commands;
mod config;

use anyhow::{bail, Result};
use clap::{Args, CommandFactory, Parser, Subcommand};
use config::RunConfig;
use std::path::PathBuf;
use std::process::ExitCode;

/// Height-function / circle-spin duality on finite graphs.
#[derive(Parser, Debug)]
#[command(name = "hsdual", version, arg_required_else_help = true)]
struct Cli {
    /// TOML run configuration; see `--print-config` for every key.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Worker threads for chains and oracle runs.
    #[arg(long, global = true, env = "HSDUAL_THREADS")]
    threads: Option<usize>,

    /// Weighted-state budget per oracle call (overrides `oracle.budget`).
    #[arg(long, global = true)]
    budget: Option<u64>,

    /// Omit the timestamped first line of CSV outputs.
    #[arg(long, global = true)]
    no_timestamp: bool,

    /// Print the effective configuration as TOML and exit.
    #[arg(long)]
    print_config: bool,

    #[command(subcommand)]
    command: Option<Command>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Run the oracle identity checks; exit 1 if any report fails.
    Verify(VerifyArgs),
    /// Run Metropolis chains and write the sampled edge fields.
    Sample(SampleArgs),
    /// Torus series, symmetric sum, bridges and CLT from sample CSVs.
    Analyze(AnalyzeArgs),
    /// Apply split/glue/merge, degree reduction or the star-tree transform.
    Transform(TransformArgs),
    /// Tabulate a potential's coefficients or its spin side on a grid.
    Potentials(PotentialArgs),
}

#[derive(Args, Debug)]
pub struct VerifyArgs {
    /// `default` (small-graph corpus) or `config` (the configured graph).
    #[arg(long, default_value = "default")]
    pub corpus: String,
    /// Restrict to these identities (repeatable).
    #[arg(long = "identity")]
    pub identities: Vec<String>,
    /// Twists per instance and sector for the duality check.
    #[arg(long)]
    pub twists: Option<usize>,
    /// Output CSV (`-` for stdout).
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct SampleArgs {
    /// `height`, `spin-star` or `spin-diamond`.
    #[arg(long)]
    pub chain: Option<String>,
    /// Measured sweeps per chain.
    #[arg(long)]
    pub sweeps: Option<u64>,
    #[arg(long)]
    pub burnin: Option<u64>,
    #[arg(long)]
    pub thin: Option<u64>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub chains: Option<usize>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct AnalyzeArgs {
    /// Sample CSV written by `sample`.
    #[arg(long)]
    pub samples: PathBuf,
    /// Series CSV (`-` for stdout).
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// JSON summary file; stdout when omitted.
    #[arg(long)]
    pub summary: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct TransformArgs {
    /// Input graph text file; defaults to the configured graph.
    #[arg(long)]
    pub input: Option<PathBuf>,
    /// Primitive ops such as `split 0 2`, `glue 1 3` or `merge`, applied in order.
    #[arg(long = "op")]
    pub ops: Vec<String>,
    /// Degree-reduce at this vertex (repeatable).
    #[arg(long = "degree-reduce")]
    pub degree_reduce: Vec<usize>,
    /// Apply the star-tree transform after the other ops.
    #[arg(long)]
    pub star_tree: bool,
    /// Replay a log written by `--log`.
    #[arg(long)]
    pub replay: Option<PathBuf>,
    /// Write the applied primitive ops here.
    #[arg(long)]
    pub log: Option<PathBuf>,
    /// Output graph file (`-` for stdout).
    #[arg(long)]
    pub output: Option<PathBuf>,
    /// Compare height variances before and after with the oracle.
    #[arg(long)]
    pub check: bool,
}

#[derive(Args, Debug)]
pub struct PotentialArgs {
    /// Family name, e.g. `xy`, `ivgff`, `lipschitz`.
    #[arg(long, requires = "beta", conflicts_with = "id")]
    pub family: Option<String>,
    #[arg(long)]
    pub beta: Option<f64>,
    /// Full potential id such as `annealed:1@0.5,2@0.5`.
    #[arg(long)]
    pub id: Option<String>,
    /// Coefficient table `n,c_n,V_n` (the default).
    #[arg(long, conflicts_with = "grid")]
    pub table: bool,
    /// Spin side `alpha,w,U,dU,d2U` on this many grid points.
    #[arg(long)]
    pub grid: Option<usize>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

/// Settings shared by every subcommand.
pub struct Context {
    pub cfg: RunConfig,
    pub timestamp: bool,
}

fn load_config(cli: &Cli) -> Result<RunConfig> {
    let mut cfg = match &cli.config {
        Some(path) => {
            let text = std::fs::read_to_string(path)?;
            let meaningful = text.lines().any(|l| {
                let l = l.trim();
                !l.is_empty() && !l.starts_with('#')
            });
            if !meaningful {
                bail!(EmptyConfig);
            }
            RunConfig::load(path)?
        }
        None => RunConfig::default(),
    };
    if let Some(b) = cli.budget {
        cfg.oracle.budget = b;
    }
    if cli.no_timestamp {
        cfg.output.timestamp = false;
    }
    cfg.validate()?;
    Ok(cfg)
}

#[derive(Debug)]
struct EmptyConfig;

impl std::fmt::Display for EmptyConfig {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str("the configuration file is empty")
    }
}

impl std::error::Error for EmptyConfig {}

fn run(cli: Cli) -> Result<ExitCode> {
    if let Some(n) = cli.threads {
        if n == 0 {
            bail!("--threads must be at least 1");
        }
        rayon::ThreadPoolBuilder::new().num_threads(n).build_global()?;
    }
    let cfg = load_config(&cli)?;
    if cli.print_config {
        print!("{}", cfg.to_toml());
        return Ok(ExitCode::SUCCESS);
    }
    let ctx = Context {
        timestamp: cfg.output.timestamp,
        cfg,
    };
    let Some(cmd) = cli.command else {
        Cli::command().print_help()?;
        return Ok(ExitCode::from(2));
    };
    let all_pass = match cmd {
        Command::Verify(a) => commands::verify(&ctx, &a)?,
        Command::Sample(a) => commands::sample(&ctx, &a)?,
        Command::Analyze(a) => commands::analyze(&ctx, &a)?,
        Command::Transform(a) => commands::transform(&ctx, &a)?,
        Command::Potentials(a) => commands::potentials(&ctx, &a)?,
    };
    Ok(if all_pass { ExitCode::SUCCESS } else { ExitCode::from(1) })
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => code,
        Err(e) => {
            if e.is::<EmptyConfig>() {
                eprintln!("error: {e}\n\n{}", Cli::command().render_help());
            } else {
                eprintln!("error: {e:#}");
            }
            ExitCode::from(2)
        }
    }
}
