//! `coexposure` command-line tool.

mod commands;
mod config;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};

use crate::config::{GenKind, RunConfig, WeightScheme};

#[derive(Debug, Parser)]
#[command(name = "coexposure", version, about = "Credit-concentration risk from overlapping loan portfolios")]
struct Cli {
    /// TOML run configuration.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Seed for every random draw (overrides the config).
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,
    /// Worker threads for parallel sections.
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Exposure CSV files (override the config's input list).
    #[arg(long, short, global = true, num_args = 1..)]
    input: Vec<PathBuf>,
    /// Risk weighting applied after loading.
    #[arg(long, global = true, value_enum)]
    weights: Option<WeightScheme>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Generate a synthetic exposure table.
    Gen(GenArgs),
    /// Lender statistics, impact matrix and borrower projection.
    Metrics,
    /// Within-risk-category randomization test of system DI.
    Randomize(RandomizeArgs),
    /// Move borrowers to a riskier category, alone and jointly.
    Downgrade(DowngradeArgs),
    /// Mean system DI while isolated borrowers are merged into shared ones.
    GrowOverlap(GrowArgs),
    /// Per-borrower change in system DI and HHI under a column scaling.
    Stress(StressArgs),
    /// IRB capital, granularity adjustment and co-exposure add-on per lender.
    Capital(CapitalArgs),
    /// Monte Carlo loss distribution per lender.
    Simulate(SimulateArgs),
    /// Fit the add-on parameters to simulated capital gaps.
    Calibrate(CalibrateArgs),
}

#[derive(Debug, Args)]
struct GenArgs {
    #[arg(long, value_enum)]
    kind: Option<GenKind>,
    #[arg(long)]
    lenders: Option<usize>,
    /// Issuers in the loan book (ds2).
    #[arg(long)]
    issuers: Option<usize>,
    /// Single-lender borrowers per lender (ds1).
    #[arg(long)]
    isolated: Option<usize>,
    /// Shared borrowers (ds1).
    #[arg(long)]
    shared: Option<usize>,
}

#[derive(Debug, Args)]
struct RandomizeArgs {
    #[arg(long)]
    trials: Option<usize>,
    #[arg(long)]
    bins: Option<usize>,
}

#[derive(Debug, Args)]
struct DowngradeArgs {
    /// Borrower ids to downgrade.
    #[arg(long, value_delimiter = ',', num_args = 1..)]
    borrowers: Vec<String>,
    /// Target risk category.
    #[arg(long)]
    to: Option<u32>,
}

#[derive(Debug, Args)]
struct GrowArgs {
    #[arg(long)]
    steps: Option<usize>,
    #[arg(long)]
    trials: Option<usize>,
}

#[derive(Debug, Args)]
struct StressArgs {
    #[arg(long)]
    factor: Option<f64>,
}

#[derive(Debug, Args)]
struct CapitalArgs {
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long)]
    eta: Option<f64>,
}

#[derive(Debug, Args)]
struct SimulateArgs {
    #[arg(long)]
    iterations: Option<usize>,
    #[arg(long)]
    q: Option<f64>,
    /// Downturn parameter A in `pd -> sqrt(A pd)`.
    #[arg(long, conflicts_with = "no_downturn")]
    downturn_a: Option<f64>,
    /// Use pds as given.
    #[arg(long)]
    no_downturn: bool,
}

#[derive(Debug, Args)]
struct CalibrateArgs {
    #[command(flatten)]
    sim: SimulateArgs,
    /// Store the fitted alpha and eta in the config file (a `.bak` copy is kept).
    #[arg(long, requires = "config")]
    write_params: bool,
}

impl SimulateArgs {
    fn apply(&self, cfg: &mut RunConfig) {
        if let Some(n) = self.iterations {
            cfg.simulation.iterations = n;
        }
        if let Some(q) = self.q {
            cfg.simulation.q = q;
        }
        if let Some(a) = self.downturn_a {
            cfg.simulation.downturn = true;
            cfg.simulation.downturn_a = a;
        }
        if self.no_downturn {
            cfg.simulation.downturn = false;
        }
    }
}

fn set<T>(slot: &mut T, value: Option<T>) {
    if let Some(v) = value {
        *slot = v;
    }
}

/// Folds command-line overrides into the config.
fn resolve(cli: &Cli) -> Result<RunConfig> {
    let mut cfg = match &cli.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    set(&mut cfg.seed, cli.seed);
    if !cli.input.is_empty() {
        cfg.input.exposures = cli.input.clone();
    }
    set(&mut cfg.input.weight_scheme, cli.weights);
    cfg.gen.ds2.seed = cfg.seed;
    match &cli.command {
        Command::Gen(a) => {
            set(&mut cfg.gen.kind, a.kind);
            set(&mut cfg.gen.issuers, a.issuers);
            if let Some(n) = a.lenders {
                cfg.gen.ds1.n_lenders = n;
                cfg.gen.ds2.n_lenders = n;
            }
            set(&mut cfg.gen.ds1.isolated_per_lender, a.isolated);
            set(&mut cfg.gen.ds1.n_shared, a.shared);
        }
        Command::Randomize(a) => {
            set(&mut cfg.scenario.trials, a.trials);
            set(&mut cfg.scenario.bins, a.bins);
        }
        Command::Downgrade(a) => {
            if !a.borrowers.is_empty() {
                cfg.scenario.downgrade_borrowers = a.borrowers.clone();
            }
            set(&mut cfg.scenario.downgrade_to, a.to);
        }
        Command::GrowOverlap(a) => {
            set(&mut cfg.scenario.steps, a.steps);
            set(&mut cfg.scenario.trials, a.trials);
        }
        Command::Stress(a) => set(&mut cfg.scenario.factor, a.factor),
        Command::Capital(a) => {
            set(&mut cfg.coexposure.alpha, a.alpha);
            set(&mut cfg.coexposure.eta, a.eta);
        }
        Command::Simulate(a) => a.apply(&mut cfg),
        Command::Calibrate(a) => a.sim.apply(&mut cfg),
        Command::Metrics => {}
    }
    cfg.validate()?;
    Ok(cfg)
}

fn command_name(c: &Command) -> &'static str {
    match c {
        Command::Gen(_) => "gen",
        Command::Metrics => "metrics",
        Command::Randomize(_) => "randomize",
        Command::Downgrade(_) => "downgrade",
        Command::GrowOverlap(_) => "grow-overlap",
        Command::Stress(_) => "stress",
        Command::Capital(_) => "capital",
        Command::Simulate(_) => "simulate",
        Command::Calibrate(_) => "calibrate",
    }
}

fn run(cli: Cli) -> Result<()> {
    if let Some(n) = cli.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .context("configuring the thread pool")?;
    }
    let cfg = resolve(&cli)?;
    let meta = output::Meta {
        tool: "coexposure",
        version: env!("CARGO_PKG_VERSION"),
        command: command_name(&cli.command).to_string(),
        config_hash: cfg.hash()?,
        seed: cfg.seed,
    };
    let mut sink = output::Sink::new(&cli.out, meta)?;
    match &cli.command {
        Command::Gen(_) => commands::gen(&cfg, &mut sink)?,
        Command::Metrics => commands::metrics(&cfg, &mut sink)?,
        Command::Randomize(_) => commands::randomize(&cfg, &mut sink)?,
        Command::Downgrade(_) => commands::downgrade(&cfg, &mut sink)?,
        Command::GrowOverlap(_) => commands::grow_overlap(&cfg, &mut sink)?,
        Command::Stress(_) => commands::stress(&cfg, &mut sink)?,
        Command::Capital(_) => commands::capital(&cfg, &mut sink)?,
        Command::Simulate(_) => commands::simulate(&cfg, &mut sink)?,
        Command::Calibrate(a) => {
            let fit = commands::calibrate(&cfg, &mut sink)?;
            if a.write_params {
                let path = cli.config.as_deref().expect("clap enforces --config");
                let backup = config::write_params(path, fit.alpha, fit.eta)?;
                log::info!("updated {} (backup {})", path.display(), backup.display());
            }
        }
    }
    for p in sink.written() {
        println!("{}", p.display());
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
