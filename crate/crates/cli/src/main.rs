//! The `fedscore` command-line tool.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use fedscore_cli::{emit_report, load_report, parse_config, parse_gen_spec, summary_csv};
use fedscore_core::data::{generate_synthetic_dataset, write_csv_dataset};
use fedscore_core::sim::{run_experiment, summarize};
use fedscore_core::Error;

/// Environment variable taking the place of `--seed` when the flag is absent.
const SEED_ENV: &str = "FEDSCORE_SEED";

#[derive(Parser)]
#[command(name = "fedscore", version, about = "Score-consensus federated learning simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run an experiment and write its report files.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// Output directory for report.json and the CSV views.
        #[arg(long)]
        out: PathBuf,
        /// Master seed override (falls back to FEDSCORE_SEED, then the config).
        #[arg(long)]
        seed: Option<u64>,
        /// Worker-thread override for the client phase.
        #[arg(long)]
        workers: Option<usize>,
    },
    /// Parse and validate a config without running it.
    Validate {
        #[arg(long)]
        config: PathBuf,
    },
    /// Generate a synthetic dataset CSV from a spec file.
    GenData {
        #[arg(long)]
        spec: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        seed: u64,
    },
    /// Print the per-user summary table of an existing report.json.
    Summarize {
        #[arg(long)]
        report: PathBuf,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            let mut source = std::error::Error::source(&e);
            while let Some(s) = source {
                eprintln!("  caused by: {s}");
                source = s.source();
            }
            match e {
                Error::ConfigInvalid(_) => ExitCode::from(1),
                _ => ExitCode::from(2),
            }
        }
    }
}

fn run(cli: Cli) -> Result<(), Error> {
    match cli.command {
        Command::Run {
            config,
            out,
            seed,
            workers,
        } => {
            let mut cfg = parse_config(&config)?;
            let seed = match seed {
                Some(s) => Some(s),
                None => env_seed()?,
            };
            if let Some(seed) = seed {
                cfg.master_seed = seed;
            }
            if let Some(workers) = workers {
                cfg.parallel_workers = workers;
            }
            cfg.validate()?;
            let report = run_experiment(&cfg)?;
            emit_report(&report, &out)?;
            print!("{}", summary_csv(&report));
            eprintln!(
                "ran {} iterations x {} clients; report files in {}",
                report.meta.iterations,
                report.meta.clients.len(),
                out.display()
            );
            Ok(())
        }
        Command::Validate { config } => {
            let cfg = parse_config(&config)?;
            println!(
                "ok: {} labels, {} clients, {} iterations",
                cfg.label_space.len(),
                cfg.clients.len(),
                cfg.iterations
            );
            Ok(())
        }
        Command::GenData { spec, out, seed } => {
            let (label_space, synth) = parse_gen_spec(&spec)?;
            let dataset = generate_synthetic_dataset(&synth, &label_space, seed)?;
            write_csv_dataset(&out, &dataset, &label_space)?;
            println!(
                "wrote {} rows x {} features to {}",
                dataset.n_examples(),
                dataset.n_features(),
                out.display()
            );
            Ok(())
        }
        Command::Summarize { report } => {
            let report = load_report(&report)?;
            let summary = summarize(&report);
            print!("{}", summary_csv(&report));
            eprintln!(
                "{} users over {} iterations",
                summary.users.len(),
                report.meta.iterations
            );
            Ok(())
        }
    }
}

fn env_seed() -> Result<Option<u64>, Error> {
    match std::env::var(SEED_ENV) {
        Ok(v) => v
            .parse::<u64>()
            .map(Some)
            .map_err(|_| Error::ConfigInvalid(format!("{SEED_ENV}: {v:?} is not a u64"))),
        Err(_) => Ok(None),
    }
}
