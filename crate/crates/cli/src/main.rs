use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use dynpot_cli::{run, verify, ExperimentConfig, SCHEMA};

#[derive(Parser)]
#[command(name = "dynpot", version, about = "Potential-theoretic experiments for polynomial and Hénon dynamics")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the experiment described by a TOML config.
    Run { config: PathBuf },
    /// Recompute the content hashes listed in a manifest.
    Verify { manifest: PathBuf },
    /// Print an annotated config template.
    Schema,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let code = match cli.command {
        Command::Schema => {
            print!("{SCHEMA}");
            0
        }
        Command::Verify { manifest } => match verify(&manifest) {
            Ok(n) => {
                println!("ok ({n} files)");
                0
            }
            Err(e) => {
                eprintln!("{e}");
                1
            }
        },
        Command::Run { config } => {
            let text = match std::fs::read_to_string(&config) {
                Ok(t) => t,
                Err(e) => {
                    eprintln!("{}: {e}", config.display());
                    return ExitCode::from(1);
                }
            };
            match ExperimentConfig::parse(&text) {
                Err(e) => {
                    eprintln!("invalid config: {e}");
                    2
                }
                Ok(cfg) => match run::run(&cfg) {
                    Ok(out) => {
                        println!("{} {}", out.status.label(), out.manifest.display());
                        out.status.exit_code()
                    }
                    Err(e) => {
                        eprintln!("{e}");
                        e.exit_code()
                    }
                },
            }
        }
    };
    ExitCode::from(code as u8)
}
