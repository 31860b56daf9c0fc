use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use maxharm::cli::{self, RunManifest, EXIT_ERROR};

#[derive(Parser)]
#[command(name = "maxharm", version, about = "Ratio tests for exotic pseudo-differential operators")]
struct Args {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run an experiment and write report.json, ratios.csv and slopes.csv.
    Run {
        config: PathBuf,
        #[arg(long, default_value = "out")]
        out: PathBuf,
        /// Replaces the config's seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Worker threads (0 = auto); falls back to MAXHARM_THREADS.
        #[arg(long)]
        threads: Option<usize>,
        /// Validate only; write nothing.
        #[arg(long)]
        dry_run: bool,
    },
    /// List experiment ids, what they check and the keys they read.
    List,
    /// Parse and validate a config.
    Validate { config: PathBuf },
}

fn code(c: i32) -> ExitCode {
    ExitCode::from(c as u8)
}

fn main() -> ExitCode {
    let args = Args::parse();
    match args.command {
        Command::List => {
            print!("{}", cli::list_experiments());
            code(0)
        }
        Command::Validate { config } => match maxharm::verification::parse_config(&config) {
            Ok(cfg) => {
                println!("{}: valid ({})", config.display(), cfg.experiment);
                code(0)
            }
            Err(e) => {
                eprintln!("error: {e}");
                code(EXIT_ERROR)
            }
        },
        Command::Run {
            config,
            out,
            seed,
            threads,
            dry_run,
        } => {
            let manifest = cli::resolve_threads(threads).and_then(|t| RunManifest::new(&config, &out, seed, t));
            match manifest {
                Err(e) => {
                    eprintln!("error: {e}");
                    code(EXIT_ERROR)
                }
                Ok(m) if dry_run => {
                    println!("{}: valid ({}), dry run", config.display(), m.config.experiment);
                    code(0)
                }
                Ok(m) => code(cli::run(&m)),
            }
        }
    }
}
