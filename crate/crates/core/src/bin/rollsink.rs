use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use rollsink::cli::{self, ConfigFile, SweepSpec};
use rollsink::{Error, Policy, PolicyConfig, Result, RollConvention};

#[derive(Parser)]
#[command(
    name = "rollsink",
    version,
    about = "Bounded-cache autoregressive rollout tools"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Print the conditioning schedule of a policy.
    Schedule {
        #[arg(long, default_value = "rolling-sink")]
        policy: Policy,
        #[arg(short = 'K', default_value_t = 6)]
        k: usize,
        #[arg(short = 'S', default_value_t = 5)]
        s: usize,
        #[arg(long, default_value_t = 3)]
        block_size: usize,
        /// Step or step range: N, A..B or A..=B.
        #[arg(short = 'i', long = "steps", default_value = "0..=12")]
        steps: String,
        #[arg(long, default_value = "palindrome")]
        convention: RollConvention,
        /// Also write the rows as CSV.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run a rollout config and write its trace.
    Rollout {
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Compute per-step metrics from a trace.
    Metrics {
        trace: PathBuf,
        #[arg(
            long,
            value_delimiter = ',',
            default_value = "mean_drift,flicker_proxy,repetition_score"
        )]
        metrics: Vec<String>,
        /// Lookback for repetition_score.
        #[arg(long, default_value_t = 6)]
        window: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Sweep sink ratios, horizons and seeds over the three sink policies.
    Sweep {
        /// Base config; defaults apply when omitted.
        config: Option<PathBuf>,
        /// Sink ratios in percent.
        #[arg(long, value_delimiter = ',', default_value = "0,17,33,50,67,83")]
        ratios: Vec<f64>,
        #[arg(long, value_delimiter = ',', default_value = "100")]
        horizons: Vec<usize>,
        #[arg(long, default_value_t = 1)]
        seeds: u64,
        #[arg(long)]
        window: Option<usize>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn output(path: &Option<PathBuf>) -> Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(File::create(p).map_err(|e| Error::Io {
            path: p.clone(),
            source: e,
        })?)),
        None => Box::new(io::stdout().lock()),
    })
}

fn run(cmd: Command) -> Result<()> {
    match cmd {
        Command::Schedule {
            policy,
            k,
            s,
            block_size,
            steps,
            convention,
            out,
        } => {
            let cfg = PolicyConfig::new(k, s, block_size, policy, convention)?;
            let rows = cli::cmd_schedule(&cfg, cli::parse_step_range(&steps)?);
            cli::write_schedule_table(&mut io::stdout().lock(), &rows).map_err(|e| Error::Io {
                path: "<stdout>".into(),
                source: e,
            })?;
            if let Some(path) = out {
                cli::write_schedule_csv(output(&Some(path))?, &rows)?;
            }
            Ok(())
        }
        Command::Rollout { config, out } => cli::cmd_rollout(&config, &out),
        Command::Metrics {
            trace,
            metrics,
            window,
            out,
        } => cli::cmd_metrics(&trace, &metrics, window, output(&out)?),
        Command::Sweep {
            config,
            ratios,
            horizons,
            seeds,
            window,
            out,
        } => {
            let base = match config {
                Some(p) => ConfigFile::load(&p)?,
                None => ConfigFile::default(),
            };
            let rows = cli::cmd_sweep(
                &base,
                &SweepSpec {
                    ratios,
                    horizons,
                    seeds,
                    window,
                },
            )?;
            cli::write_sweep_csv(output(&out)?, &rows)
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
