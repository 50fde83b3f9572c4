use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use meta_backscatter::config::{parse_config, ScenarioConfig};
use meta_backscatter::experiments::{
    emit_csv, run_accuracy, run_delta_sweep, run_optimize_structure, run_simulate, run_size_sweep,
    write_csv, ResultRow,
};
use meta_backscatter::{Error, Result};

#[derive(Parser)]
#[command(
    name = "meta-backscatter",
    version,
    about = "Meta-material backscatter ISAC simulator"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Scenario file; defaults are used when omitted.
    #[arg(long)]
    config: Option<PathBuf>,
    /// CSV destination; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Overrides link.seed.
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Subcommand)]
enum Command {
    /// Allocation, capacity and accuracy at the configured threshold factor.
    Simulate(Common),
    /// Sweep the threshold factor alpha (δ = alpha * uniform-allocation distance).
    SweepDelta {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_delimiter = ',', default_value = "0,0.5,1,1.5,2")]
        alpha: Vec<f64>,
    },
    /// Sweep the array size with the proposed structure and three baselines.
    SweepSize {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_delimiter = ',', default_value = "1,2,3,4,5,6,7,8,9,10")]
        sizes: Vec<u32>,
    },
    /// Grid search over the configured structure space.
    OptimizeStructure(Common),
    /// Detector-only Monte Carlo at the uniform allocation.
    Accuracy {
        #[command(flatten)]
        common: Common,
        /// Frame counts to evaluate; defaults to link.frames.
        #[arg(long, value_delimiter = ',')]
        frames: Vec<usize>,
    },
}

fn load(common: &Common) -> Result<ScenarioConfig> {
    let mut cfg = match &common.config {
        Some(path) => {
            let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
                path: path.clone(),
                source,
            })?;
            parse_config(&text)?
        }
        None => ScenarioConfig::default(),
    };
    if let Some(seed) = common.seed {
        cfg.link.seed = seed;
    }
    Ok(cfg)
}

fn output(rows: &[ResultRow], out: Option<&Path>) -> Result<()> {
    match out {
        Some(path) => emit_csv(rows, path),
        None => {
            let stdout = std::io::stdout();
            write_csv(rows, stdout.lock()).map_err(|source| Error::Csv {
                path: PathBuf::from("<stdout>"),
                source,
            })
        }
    }
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Simulate(common) => {
            let cfg = load(&common)?;
            output(&run_simulate(&cfg)?, common.out.as_deref())
        }
        Command::SweepDelta { common, alpha } => {
            let cfg = load(&common)?;
            output(&run_delta_sweep(&cfg, &alpha)?, common.out.as_deref())
        }
        Command::SweepSize { common, sizes } => {
            let cfg = load(&common)?;
            output(&run_size_sweep(&cfg, &sizes)?, common.out.as_deref())
        }
        Command::OptimizeStructure(common) => {
            let cfg = load(&common)?;
            let (report, rows) = run_optimize_structure(&cfg)?;
            let s = report.best;
            let _ = writeln!(
                std::io::stderr(),
                "best: side_length={} m gap_width={} m units_per_side={} feasible={} ({} evaluated)",
                s.side_length,
                s.gap_width,
                s.units_per_side,
                report.feasible,
                report.evaluated
            );
            output(&rows, common.out.as_deref())
        }
        Command::Accuracy { common, frames } => {
            let cfg = load(&common)?;
            let frames = if frames.is_empty() {
                vec![cfg.link.n_frames]
            } else {
                frames
            };
            output(&run_accuracy(&cfg, &frames)?, common.out.as_deref())
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
