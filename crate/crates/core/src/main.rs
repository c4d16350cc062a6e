use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use snowdem::harness::{calibrate_files, check_config, run_config, CalibrateOptions, RunOptions};

#[derive(Parser)]
#[command(name = "snowdem", about = "Discrete-element simulation of sintering ice grains")]
struct Cli {
    /// Directory for time series, snapshots and fitted parameters.
    #[arg(long, global = true)]
    output_dir: Option<PathBuf>,
    /// Time step override (s).
    #[arg(long, global = true)]
    dt: Option<f64>,
    /// Seed for randomly placed particles.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Worker threads for the pair loop.
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Write a snapshot every N steps.
    #[arg(long, global = true)]
    snapshot_every: Option<u64>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a scenario configuration.
    Run { config: PathBuf },
    /// Fit creep parameters to one or more sintering datasets.
    Calibrate {
        #[arg(required = true)]
        datasets: Vec<PathBuf>,
        /// Scale of the table constants used as the starting point.
        #[arg(long, default_value_t = 1.0)]
        scale: f64,
        /// Fit k_i instead of holding it at the table value.
        #[arg(long)]
        free_ki: bool,
    },
    /// Validate a configuration without running it.
    Check { scene: PathBuf },
    /// Print version and file format versions.
    Version,
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
    let result = match cli.command {
        Command::Run { config } => {
            let opts = RunOptions {
                output_dir: cli.output_dir,
                dt: cli.dt,
                seed: cli.seed,
                threads: cli.threads,
                snapshot_every: cli.snapshot_every,
            };
            run_config(&config, &opts).map(|s| {
                println!("{}", s.scenario);
                for (name, v) in &s.values {
                    println!("  {name} = {v:e}");
                }
            })
        }
        Command::Calibrate { datasets, scale, free_ki } => {
            let opts = CalibrateOptions {
                output_dir: cli.output_dir,
                scale,
                free_k_i: free_ki,
            };
            calibrate_files(&datasets, &opts).map(|lines| lines.iter().for_each(|l| println!("{l}")))
        }
        Command::Check { scene } => check_config(&scene).map(|s| println!("{s}")),
        Command::Version => {
            println!("snowdem {}", env!("CARGO_PKG_VERSION"));
            println!("config schema {}", snowdem::harness::config::CONFIG_VERSION);
            println!("timeseries {}", snowdem::harness::io::TIMESERIES_FORMAT);
            println!(
                "snapshot {} v{}",
                snowdem::harness::io::SNAPSHOT_FORMAT,
                snowdem::harness::io::SNAPSHOT_VERSION
            );
            Ok(())
        }
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
