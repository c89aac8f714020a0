use std::io;
use std::path::PathBuf;
use std::process::ExitCode;

use bems_cli::commands::{self, bench_dir};
use bems_cli::{server, CliError, ServiceConfig};
use clap::{Parser, Subcommand};

#[derive(Parser)]
#[command(name = "bems", version, about = "Home energy agent: ingestion, benchmark, chat and HTTP service")]
struct Cli {
    /// TOML configuration file.
    #[arg(short, long, global = true)]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Load a history CSV and store it as a building's series.
    Ingest {
        csv: PathBuf,
        #[arg(short, long)]
        building: String,
        /// Average finer or irregular samples into 15-minute buckets.
        #[arg(long)]
        resample: bool,
    },
    /// Write a synthetic month for a preset building.
    Synth {
        building: String,
        #[arg(long, default_value_t = 7)]
        seed: u64,
        #[arg(long)]
        days: Option<u32>,
    },
    /// Write the canonical scripted fixture for each configured building.
    Fixture {
        #[arg(short, long, default_value = "data/fixtures")]
        out: PathBuf,
        /// Leave the classification step out of this many queries.
        #[arg(long, default_value_t = 0)]
        drop_classifications: usize,
    },
    /// Run the benchmark battery and write results, logs and the report.
    Bench {
        /// Buildings to run; all configured buildings when omitted.
        #[arg(short, long)]
        building: Vec<String>,
        #[arg(short, long)]
        out: Option<PathBuf>,
        /// Only run these query ids.
        #[arg(long, value_delimiter = ',')]
        only: Option<Vec<String>>,
        /// Skip queries already in the results file.
        #[arg(long)]
        resume: bool,
    },
    /// Recompute scores and the report from an archived results file.
    Rescore {
        #[arg(short, long)]
        out: Option<PathBuf>,
    },
    /// Interactive session: one query per line, `exit` to leave.
    Chat {
        #[arg(short, long)]
        building: Option<String>,
    },
    /// Serve the HTTP API and event stream.
    Serve {
        #[arg(short, long)]
        listen: Option<String>,
    },
}

fn print_json(v: &impl serde::Serialize) -> Result<(), CliError> {
    println!("{}", serde_json::to_string_pretty(v).map_err(io::Error::other)?);
    Ok(())
}

fn run(cli: Cli) -> Result<(), CliError> {
    let load = || ServiceConfig::load(cli.config.as_deref());
    match cli.command {
        Command::Ingest { csv, building, resample } => {
            let cfg = ServiceConfig::load_unchecked(cli.config.as_deref())?;
            print_json(&commands::ingest(&cfg, &csv, &building, resample)?)
        }
        Command::Synth { building, seed, days } => {
            let cfg = ServiceConfig::load_unchecked(cli.config.as_deref())?;
            println!("{}", commands::synth(&cfg, &building, seed, days)?.display());
            Ok(())
        }
        Command::Fixture { out, drop_classifications } => {
            let cfg = ServiceConfig::load_unchecked(cli.config.as_deref())?;
            for p in commands::fixtures(&cfg, &out, drop_classifications)? {
                println!("{}", p.display());
            }
            Ok(())
        }
        Command::Bench { building, out, only, resume } => {
            let cfg = load()?;
            let s = commands::bench(&cfg, &building, out.as_deref(), only, resume)?;
            println!("{} rows written to {}", s.rows, s.out_dir.display());
            print!("{}", s.report.to_markdown());
            match s.aborted {
                Some(a) => Err(CliError::Provider(format!("stopped at {}/{}: {}", a.building_id, a.query_id, a.message))),
                None => Ok(()),
            }
        }
        Command::Rescore { out } => {
            let cfg = ServiceConfig::load_unchecked(cli.config.as_deref())?;
            let dir = out.unwrap_or_else(|| bench_dir(&cfg));
            print!("{}", commands::rescore_dir(&cfg, &dir)?.to_markdown());
            Ok(())
        }
        Command::Chat { building } => {
            let cfg = load()?;
            let id = building.unwrap_or_else(|| cfg.buildings[0].clone());
            commands::chat(&cfg, &id, io::stdin().lock(), io::stdout())?;
            Ok(())
        }
        Command::Serve { listen } => {
            let mut cfg = load()?;
            if let Some(l) = listen {
                cfg.listen = l;
            }
            let rt = tokio::runtime::Runtime::new()?;
            rt.block_on(server::serve(cfg))
        }
    }
}

fn main() -> ExitCode {
    tracing_subscriber::fmt().with_env_filter(tracing_subscriber::EnvFilter::from_default_env()).with_writer(io::stderr).init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
