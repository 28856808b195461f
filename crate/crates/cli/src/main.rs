//! `r2dnet`: dissipativity analysis and simulation of 2-D feedback systems
//! over digital networks.

mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use commands::{
    cmd_check, cmd_discretize, cmd_simulate, cmd_sweep_rho, SimMode, EXIT_CONFIG_ERROR,
};
use config::RunConfig;

#[derive(Parser)]
#[command(
    name = "r2dnet",
    about = "Dissipativity certification, quantization and event-triggered simulation of 2-D Roesser systems",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Sample the continuous plant and emit the discrete blocks.
    Discretize {
        #[arg(long)]
        config: PathBuf,
        /// Output directory (default: config's output.dir).
        #[arg(long)]
        out: Option<PathBuf>,
        /// Print the effective configuration before running.
        #[arg(long)]
        dump_config: bool,
    },
    /// Maximize the output-feedback level over a sampling-period grid.
    SweepRho {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Horizontal period range a:b:n (default 0.02:0.3:7).
        #[arg(long)]
        h1_range: Option<String>,
        /// Vertical period range a:b:n (default 0.1:3:7).
        #[arg(long)]
        h2_range: Option<String>,
        #[arg(long)]
        dump_config: bool,
    },
    /// Simulate the sampled plant on the 2-D grid.
    Simulate {
        #[arg(long)]
        config: PathBuf,
        /// open | closed | closed-quantized | closed-triggered.
        #[arg(long, default_value = "open")]
        mode: String,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        dump_config: bool,
    },
    /// Evaluate the quantized-loop stability condition and trigger design.
    Check {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        dump_config: bool,
    },
}

fn load_config(path: &PathBuf, dump: bool) -> Result<RunConfig, ExitCode> {
    match RunConfig::load(path) {
        Ok(cfg) => {
            if dump {
                print!("{}", cfg.dump());
            }
            Ok(cfg)
        }
        Err(message) => {
            eprintln!("config error: {message}");
            Err(ExitCode::from(EXIT_CONFIG_ERROR as u8))
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Discretize { config, out, dump_config } => {
            match load_config(config, *dump_config) {
                Ok(cfg) => {
                    let dir = out.clone().unwrap_or_else(|| cfg.out_dir.clone());
                    cmd_discretize(&cfg, &dir)
                }
                Err(code) => return code,
            }
        }
        Command::SweepRho { config, out, h1_range, h2_range, dump_config } => {
            match load_config(config, *dump_config) {
                Ok(cfg) => {
                    let dir = out.clone().unwrap_or_else(|| cfg.out_dir.clone());
                    cmd_sweep_rho(&cfg, &dir, h1_range.as_deref(), h2_range.as_deref())
                }
                Err(code) => return code,
            }
        }
        Command::Simulate { config, mode, out, dump_config } => {
            let mode = match SimMode::parse(mode) {
                Ok(m) => m,
                Err(msg) => {
                    eprintln!("config error: {msg}");
                    return ExitCode::from(EXIT_CONFIG_ERROR as u8);
                }
            };
            match load_config(config, *dump_config) {
                Ok(cfg) => {
                    let dir = out.clone().unwrap_or_else(|| cfg.out_dir.clone());
                    cmd_simulate(&cfg, &dir, mode)
                }
                Err(code) => return code,
            }
        }
        Command::Check { config, dump_config } => match load_config(config, *dump_config) {
            Ok(cfg) => cmd_check(&cfg),
            Err(code) => return code,
        },
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}", e.message);
            ExitCode::from(e.code as u8)
        }
    }
}
