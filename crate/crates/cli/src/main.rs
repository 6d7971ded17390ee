use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use mpemba_cli::{run, Command, RunOptions};

#[derive(Parser)]
#[command(name = "mpemba", version, about = "Resource relaxation in random free circuits")]
struct Cli {
    #[command(subcommand)]
    command: Sub,
}

#[derive(Subcommand)]
enum Sub {
    /// Mpemba crossings between initial tilts.
    Qme(Common),
    /// Preheating followed by free evolution.
    Qpme(Common),
    /// Reset-channel spectrum of the fixed Floquet circuit.
    Markov(Common),
    /// Write the 768 monomial two-qubit Cliffords.
    EnumerateGates(Common),
}

#[derive(Args)]
struct Common {
    /// `key = value` config file.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Overrides `master_seed`.
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads.
    #[arg(long)]
    threads: Option<usize>,
    /// `key=value` override, repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let (command, common) = match cli.command {
        Sub::Qme(c) => (Command::Qme, c),
        Sub::Qpme(c) => (Command::Qpme, c),
        Sub::Markov(c) => (Command::Markov, c),
        Sub::EnumerateGates(c) => (Command::EnumerateGates, c),
    };
    let opts = RunOptions {
        config: common.config,
        out: common.out,
        seed: common.seed,
        threads: common.threads,
        overrides: common.overrides,
    };
    match run(command, &opts) {
        Ok(manifest) => {
            if !manifest.config_echo.is_empty() {
                print!("{}", manifest.config_echo);
            }
            for note in &manifest.notes {
                println!("# {note}");
            }
            println!("# wrote {} files to {}", manifest.outputs.len(), opts.out.display());
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
