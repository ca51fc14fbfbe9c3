//! Command-line front end: run experiments, generate instances, inspect them.

use std::path::PathBuf;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use hma2b::harness::{diagnostics, run_and_write, ExperimentConfig, InstanceSource, PolicyId};
use hma2b::{generate_instance, summarize, RewardMatrix};

#[derive(Parser)]
#[command(name = "hma2b", version, about = "Hinted multi-agent bandit simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run an experiment and emit the checkpoint CSV.
    Run(RunArgs),
    /// Sample a random instance with a minimum gap in a given range.
    GenInstance(GenArgs),
    /// Print the optimum, the minimum gap and the kl gap of an instance.
    Summarize(SummarizeArgs),
}

#[derive(Args)]
struct RunArgs {
    /// JSON experiment config; other flags override its fields.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Instance file (required without --config).
    #[arg(long)]
    instance: Option<PathBuf>,
    #[arg(long)]
    policy: Option<PolicyId>,
    #[arg(long)]
    horizon: Option<u64>,
    #[arg(long)]
    reps: Option<u64>,
    /// Base seed; replication i uses seed + i.
    #[arg(long)]
    seed: Option<u64>,
    /// Known minimum gap (hdetc only).
    #[arg(long)]
    gap: Option<f64>,
    /// JSONL trace of replication 0.
    #[arg(long)]
    trace: Option<PathBuf>,
    /// CSV output path; stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Comma-separated checkpoint rounds, replacing the geometric grid.
    #[arg(long, value_delimiter = ',')]
    checkpoints: Option<Vec<u64>>,
}

#[derive(Args)]
struct GenArgs {
    #[arg(long)]
    m: usize,
    #[arg(long)]
    k: usize,
    #[arg(long)]
    gap_min: f64,
    #[arg(long)]
    gap_max: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct SummarizeArgs {
    #[arg(long)]
    instance: PathBuf,
    /// Slack for the kl gap; defaults to a quarter of the minimum gap.
    #[arg(long)]
    delta: Option<f64>,
}

fn build_config(args: RunArgs) -> Result<ExperimentConfig> {
    let mut cfg = match &args.config {
        Some(path) => ExperimentConfig::load(path).with_context(|| format!("loading {}", path.display()))?,
        None => {
            let (Some(instance), Some(policy), Some(horizon)) = (args.instance.clone(), args.policy, args.horizon) else {
                bail!("without --config, --instance, --policy and --horizon are required");
            };
            ExperimentConfig {
                instance: InstanceSource::File(instance),
                policy,
                gap: None,
                horizon,
                replications: 1,
                base_seed: 0,
                output: None,
                trace: None,
                checkpoints: None,
            }
        }
    };
    if let Some(instance) = args.instance {
        cfg.instance = InstanceSource::File(instance);
    }
    if let Some(policy) = args.policy {
        cfg.policy = policy;
    }
    if let Some(horizon) = args.horizon {
        cfg.horizon = horizon;
    }
    if let Some(reps) = args.reps {
        cfg.replications = reps;
    }
    if let Some(seed) = args.seed {
        cfg.base_seed = seed;
    }
    if args.gap.is_some() {
        cfg.gap = args.gap;
    }
    if args.trace.is_some() {
        cfg.trace = args.trace;
    }
    if args.out.is_some() {
        cfg.output = args.out;
    }
    if args.checkpoints.is_some() {
        cfg.checkpoints = args.checkpoints;
    }
    if cfg.gap.is_some() && cfg.policy != PolicyId::Hdetc {
        bail!("--gap only applies to hdetc");
    }
    cfg.validate()?;
    Ok(cfg)
}

fn summarize_cmd(args: SummarizeArgs) -> Result<()> {
    let means = RewardMatrix::load(&args.instance).with_context(|| format!("loading {}", args.instance.display()))?;
    let summary = summarize(&means)?;
    let delta = args.delta.unwrap_or(summary.min_gap / 4.0);
    let diag = diagnostics(&summary, means.num_agents(), delta)?;
    println!("agents: {}", means.num_agents());
    println!("arms: {}", means.num_arms());
    println!("optimal matching: {}", summary.optimal_matching);
    println!("optimal utility: {:.6}", summary.optimal_utility);
    println!("minimum gap: {:.6}", diag.min_gap);
    println!("kl gap (delta {delta:.6}): {:.6}", diag.kl_gap);
    Ok(())
}

fn main() -> Result<()> {
    match Cli::parse().command {
        Command::Run(args) => {
            run_and_write(&build_config(args)?)?;
        }
        Command::GenInstance(a) => {
            let means = generate_instance(a.m, a.k, a.gap_min, a.gap_max, a.seed)?;
            means.save(&a.out, Some(a.seed))?;
        }
        Command::Summarize(args) => summarize_cmd(args)?,
    }
    Ok(())
}
