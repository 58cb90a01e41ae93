//! `starkmem`: fictitious-field simulation and compensation from the command
//! line.

mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use config::{CompensateMode, ConfigError, CycleCompensation, ScenarioConfig, SweepRange};

#[derive(Parser, Debug)]
#[command(
    name = "starkmem",
    version,
    about = "Light-induced fictitious magnetic fields in cold-atom quantum memories"
)]
struct Cli {
    /// TOML scenario file; built-in defaults when omitted.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, global = true, default_value = ".")]
    out: PathBuf,
    /// Overrides run.seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads, 0 = one per core.
    #[arg(long, global = true, default_value_t = 0)]
    threads: usize,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Per-sublevel scalar/vector/tensor shifts and the fictitious field.
    Shift {
        /// Field vs uniform intensity, MIN:MAX:N in mW/mm².
        #[arg(long, allow_hyphen_values = true)]
        sweep_intensity: Option<SweepRange>,
    },
    /// Retrieval efficiency vs storage time.
    Curve {
        #[arg(long)]
        t_max_us: Option<f64>,
        #[arg(long)]
        points: Option<usize>,
    },
    /// 1/e lifetime of the configured field.
    Lifetime {
        /// Compensation JSON from `compensate`; its field is added first.
        #[arg(long)]
        plan: Option<PathBuf>,
    },
    /// Normalized lifetime over a (B1, B2) grid.
    Heatmap {
        /// MIN:MAX:N in mG/cm.
        #[arg(long, allow_hyphen_values = true)]
        b1_range: Option<SweepRange>,
        /// MIN:MAX:N in mG/cm².
        #[arg(long, allow_hyphen_values = true)]
        b2_range: Option<SweepRange>,
    },
    /// Decay averaged over shot-to-shot bias fluctuations.
    Montecarlo {
        #[arg(long)]
        delta_b_mg: Option<f64>,
        #[arg(long)]
        levels: Option<usize>,
        #[arg(long)]
        cycles: Option<usize>,
        #[arg(long, value_enum)]
        compensation: Option<CycleCompensation>,
        /// Lifetime vs fluctuation range, MIN:MAX:N in mG.
        #[arg(long, allow_hyphen_values = true)]
        sweep_delta_b: Option<SweepRange>,
    },
    /// Compensation-beam plan for the configured residual field.
    Compensate {
        #[arg(long, value_enum)]
        mode: Option<CompensateMode>,
        #[arg(long)]
        budget: Option<usize>,
    },
    /// SLM phase mask for the configured target profile.
    Mask {
        #[arg(long)]
        iterations: Option<usize>,
    },
}

fn exit_code(err: &anyhow::Error) -> u8 {
    if err.downcast_ref::<ConfigError>().is_some() {
        return 2;
    }
    match err.downcast_ref::<starkmem::Error>() {
        Some(e) if e.is_infeasibility() => 4,
        Some(starkmem::Error::InvalidInput(_) | starkmem::Error::GridMismatch { .. }) => 2,
        Some(_) => 3,
        None => 1,
    }
}

fn run(cli: Cli) -> anyhow::Result<()> {
    let mut cfg = ScenarioConfig::load(cli.config.as_deref())?;
    if let Some(seed) = cli.seed {
        cfg.run.seed = seed;
    }
    rayon::ThreadPoolBuilder::new()
        .num_threads(cli.threads)
        .build_global()
        .map_err(|e| anyhow::anyhow!("thread pool: {e}"))?;
    std::fs::create_dir_all(&cli.out)?;
    let summary = commands::execute(&cli.command, &mut cfg, &cli.out)?;
    println!("{summary}");
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(exit_code(&err))
        }
    }
}
