use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Result;
use clap::{Parser, Subcommand};
use himod_bench::{run, Experiment, ExperimentConfig, Method};

#[derive(Parser, Debug)]
#[command(name = "himod-bench", about = "HiMod, HiPOD and HiRB experiments", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Flat key = value config file.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Overrides training.seed and greedy.seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory for CSVs and summary.txt.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// hipod, hirb or both.
    #[arg(long, global = true)]
    method: Option<String>,
    /// Reduced basis size N.
    #[arg(long, global = true)]
    n: Option<usize>,
    /// Training-set size M.
    #[arg(long, global = true)]
    m: Option<usize>,
}

#[derive(Subcommand, Debug, Clone, Copy)]
enum Command {
    EigDecay,
    ErrorVsN,
    Speedup,
    OfflineCost,
    InfsupSweep,
    FieldExport,
    /// Every experiment that applies to the configured problem.
    All,
}

fn config(cli: &Cli) -> Result<ExperimentConfig> {
    let Some(path) = &cli.config else { anyhow::bail!("--config <path> is required") };
    let mut c = ExperimentConfig::load(path)?;
    if let Some(s) = cli.seed {
        c.training_seed = s;
        c.greedy_seed = s;
    }
    if let Some(o) = &cli.out {
        c.out = o.clone();
    }
    if let Some(m) = &cli.method {
        c.method = Method::parse(m)?;
    }
    if let Some(n) = cli.n {
        c.n = n;
        c.speedup_sizes.retain(|&s| s <= n);
        if c.speedup_sizes.is_empty() {
            c.speedup_sizes.push(n);
        }
        c.supremizers = c.supremizers.min(n);
    }
    if let Some(m) = cli.m {
        c.training_size = m;
    }
    c.validate()?;
    Ok(c)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let which: Vec<Experiment> = match cli.command {
        Command::EigDecay => vec![Experiment::EigDecay],
        Command::ErrorVsN => vec![Experiment::ErrorVsN],
        Command::Speedup => vec![Experiment::Speedup],
        Command::OfflineCost => vec![Experiment::OfflineCost],
        Command::InfsupSweep => vec![Experiment::InfsupSweep],
        Command::FieldExport => vec![Experiment::FieldExport],
        Command::All => Experiment::ALL.to_vec(),
    };
    let outcome = config(&cli).and_then(|c| run(&c, &which));
    match outcome {
        Ok(summary) => {
            for line in summary {
                println!("{line}");
            }
            ExitCode::SUCCESS
        }
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::FAILURE
        }
    }
}
