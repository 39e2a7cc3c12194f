use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use dfrc::analysis;
use dfrc::harness::{self, emit, ExperimentConfig, Fault, OutputFormat, SweepSpec};
use dfrc::receivers::DetectorStrategy;

#[derive(Parser)]
#[command(name = "dfrc", version, about = "Uplink DFRC receiver simulator")]
struct Cli {
    /// Worker threads (default: $DFRC_THREADS, else all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a Monte Carlo sweep and write the aggregated metrics.
    Simulate {
        #[arg(long)]
        config: PathBuf,
        /// VAR=START:STOP:STEP with VAR one of L, P_r_dB, M_r.
        #[arg(long)]
        sweep: Option<String>,
        #[arg(long)]
        trials: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
        /// Output file; stdout when absent.
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, value_enum)]
        format: Option<Format>,
        /// Comma-separated list of sic, projection, joint_ml, genie.
        #[arg(long)]
        schemes: Option<String>,
        #[arg(long, value_enum)]
        detector: Option<Detector>,
    },
    /// Run the invariant suite; exits non-zero on any failed check.
    Verify {
        #[arg(long, default_value_t = 1)]
        seed: u64,
        /// Break the projector on purpose to confirm the suite notices.
        #[arg(long, hide = true)]
        inject_fault: bool,
    },
    /// Print closed-form SNR, SINR, CRB and rate figures per sweep point.
    Analyze {
        #[arg(long)]
        config: PathBuf,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Csv,
    Json,
}

#[derive(Clone, Copy, ValueEnum)]
enum Detector {
    Exhaustive,
    Sdr,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}

fn run(cli: Cli) -> dfrc::Result<ExitCode> {
    let threads = match cli.threads {
        Some(n) => Some(n),
        None => harness::threads_from_env()?,
    };
    match cli.command {
        Command::Simulate {
            config,
            sweep,
            trials,
            seed,
            out,
            format,
            schemes,
            detector,
        } => {
            let mut cfg = ExperimentConfig::from_path(&config)?;
            if let Some(s) = sweep {
                cfg.sweep = SweepSpec::parse(&s)?;
            }
            if let Some(t) = trials {
                cfg.trials = t;
            }
            if let Some(s) = seed {
                cfg.master_seed = s;
            }
            if let Some(o) = out {
                cfg.output = Some(o);
            }
            if let Some(f) = format {
                cfg.format = match f {
                    Format::Csv => OutputFormat::Csv,
                    Format::Json => OutputFormat::Json,
                };
            }
            if let Some(s) = schemes {
                cfg.schemes = harness::parse_schemes(&s)?;
            }
            if let Some(d) = detector {
                cfg.detector.strategy = match d {
                    Detector::Exhaustive => DetectorStrategy::Exhaustive,
                    Detector::Sdr => DetectorStrategy::Sdr,
                };
            }
            cfg.validate()?;
            let records = match threads {
                Some(n) => harness::run_sweep_with_threads(&cfg, n)?,
                None => harness::run_sweep(&cfg)?,
            };
            match &cfg.output {
                Some(path) => emit::emit_results(&records, path, cfg.format)?,
                None => {
                    let text = emit::encode(&records, cfg.format)?;
                    let mut stdout = std::io::stdout().lock();
                    stdout
                        .write_all(text.as_bytes())
                        .map_err(|source| dfrc::Error::Io {
                            path: "<stdout>".into(),
                            source,
                        })?;
                }
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::Verify { seed, inject_fault } => {
            let report = if inject_fault {
                harness::verify_with_fault(seed, Fault::DropGramInverse)?
            } else {
                harness::verify(seed)?
            };
            println!("{report}");
            Ok(if report.passed() {
                ExitCode::SUCCESS
            } else {
                ExitCode::FAILURE
            })
        }
        Command::Analyze { config } => {
            let cfg = ExperimentConfig::from_path(&config)?;
            println!(
                "{:>10} {:>14} {:>14} {:>14} {:>14}",
                cfg.sweep.var.name(),
                "snr_proj",
                "sinr_sic",
                "crb",
                "rate_factor"
            );
            for (value, sys) in cfg.points()? {
                println!(
                    "{:>10} {:>14.6e} {:>14.6e} {:>14.6e} {:>14.6}",
                    value,
                    analysis::snr_projected_theory(&sys)?,
                    analysis::sinr_sic_expected(&sys),
                    analysis::crb_orthogonal(&sys),
                    1.0 - sys.m_t as f64 / sys.snapshots as f64,
                );
            }
            Ok(ExitCode::SUCCESS)
        }
    }
}
