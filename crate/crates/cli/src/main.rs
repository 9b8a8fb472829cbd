//! `qrmsim`: run trapped-ion quantum Rabi model experiments from JSON configs.

mod config;
mod error;
mod experiments;
mod output;

use std::{
    fs::File,
    io::{self, BufWriter, Write},
    path::PathBuf,
    process::ExitCode,
};

use clap::{error::ErrorKind, Parser};

use config::{Experiment, Format, Overrides};
use error::{CliError, CliResult};

#[derive(Debug, Parser)]
#[command(name = "qrmsim", version, about = "Trapped-ion quantum Rabi model simulator")]
struct Args {
    /// Experiment to run.
    #[arg(value_enum)]
    experiment: Experiment,
    /// JSON experiment config.
    #[arg(long)]
    config: PathBuf,
    /// Override the Fock cutoff N.
    #[arg(long)]
    fock_cutoff: Option<usize>,
    /// Output file (stdout when omitted).
    #[arg(long)]
    output: Option<PathBuf>,
    #[arg(long, value_enum)]
    format: Option<Format>,
    /// Worker threads for regime maps and adiabatic ladders (default: all cores).
    #[arg(long)]
    jobs: Option<usize>,
}

fn run(args: Args) -> CliResult<()> {
    let overrides = Overrides { fock_cutoff: args.fock_cutoff, output: args.output, format: args.format };
    let job = config::load(&args.config, args.experiment, &overrides)?;
    if args.jobs == Some(0) {
        return Err(CliError::config("--jobs must be at least 1"));
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(args.jobs.unwrap_or(0))
        .build()
        .map_err(|e| CliError::config(format!("--jobs: could not start worker pool: {e}")))?;
    log::info!("running {} with {} worker threads", job.experiment.name(), pool.current_num_threads());
    let report = experiments::run(&job.plan, &pool)?;

    let (target, sink): (String, Box<dyn Write>) = match &job.output {
        Some(path) => {
            let file = File::create(path).map_err(|source| CliError::Io { path: path.display().to_string(), source })?;
            (path.display().to_string(), Box::new(BufWriter::new(file)))
        }
        None => ("stdout".into(), Box::new(io::stdout().lock())),
    };
    let written = match job.format {
        Format::Csv => output::write_csv(&job, &report, sink),
        Format::Json => output::write_json(&job, &report, sink),
    };
    written.map_err(|e| CliError::Io { path: target, source: io::Error::other(e) })
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let args = match Args::try_parse() {
        Ok(a) => a,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => ExitCode::SUCCESS,
                _ => ExitCode::from(1),
            };
        }
    };
    match run(args) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("qrmsim: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
