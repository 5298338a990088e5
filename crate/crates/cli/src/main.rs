use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use qkernel_cli::{dataset, kernels, sweep, tables, CliError, CliResult, ExperimentConfig};

#[derive(Debug, Parser)]
#[command(name = "qkernel", version, about = "Noisy quantum kernel experiments")]
struct Cli {
    /// JSON experiment config; defaults apply when omitted.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Overrides the config seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Overrides the config output directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Prepare features and write the feature caches.
    Data,
    /// Write ideal, noisy and (with shots) estimated kernel matrices.
    Kernel,
    /// Sweep the noisy-layer count and fit the noisy hypothesis at each value.
    Sweep,
    /// Tabulate the closed-form bounds over (L, m).
    Bounds,
    /// Map (n, L) configurations to fail or uninformative regions.
    Regions,
}

fn run(cli: Cli) -> CliResult<()> {
    let mut cfg = match &cli.config {
        Some(path) => ExperimentConfig::load(path)?,
        None => ExperimentConfig::default(),
    };
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    if let Some(out) = cli.out {
        cfg.out_dir = out;
    }
    cfg.validate()?;
    if let Some(threads) = cli.threads {
        if threads == 0 {
            return Err(CliError::Config("--threads must be at least 1".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global()
            .map_err(|e| CliError::Config(e.to_string()))?;
    }
    match cli.command {
        Command::Data => {
            let p = dataset::cmd_data(&cfg)?;
            eprintln!(
                "wrote {} train and {} test rows to {}",
                p.train.len(),
                p.test.len(),
                cfg.out_dir.display()
            );
        }
        Command::Kernel => {
            let written = kernels::cmd_kernel(&cfg)?;
            eprintln!("wrote {} kernel matrices to {}", written.len(), cfg.out_dir.display());
        }
        Command::Sweep => {
            let out = sweep::cmd_sweep(&cfg)?;
            eprintln!(
                "swept {} layer counts; phase transition at {:?}, L* = {:?}",
                out.records.len(),
                out.summary.phase_transition_layer,
                out.summary.demarcation_layers
            );
        }
        Command::Bounds => {
            let rows = tables::cmd_bounds(&cfg)?;
            eprintln!("wrote {} bound rows", rows.len());
        }
        Command::Regions => {
            tables::cmd_regions(&cfg)?;
            eprintln!("wrote {}", cfg.out_dir.join(tables::REGIONS_CSV).display());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
