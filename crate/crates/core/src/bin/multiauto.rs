use clap::{Parser, Subcommand};
use multiauto::cli_runner::{init_threads, run_file};
use multiauto::function_core::catalogue;
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "multiauto", version, about = "Almost automorphic function experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run an experiment config.
    Run {
        config: PathBuf,
        /// Output directory, overriding `output_dir` in the config.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// List built-in functions and kernels.
    Catalogue {
        /// `function`, `kernel`, or a substring of the entry name.
        filter: Option<String>,
    },
    /// Print the version.
    Version,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    if let Err(e) = init_threads() {
        eprintln!("{e}");
        return ExitCode::from(e.exit_code() as u8);
    }
    match cli.command {
        Command::Run { config, out } => ExitCode::from(run_file(&config, out.as_deref()) as u8),
        Command::Catalogue { filter } => {
            let list = match filter {
                Some(f) => catalogue::filter(&f),
                None => catalogue::entries().iter().collect(),
            };
            for e in list {
                println!("{}", e.line());
            }
            ExitCode::SUCCESS
        }
        Command::Version => {
            println!("multiauto {}", env!("CARGO_PKG_VERSION"));
            ExitCode::SUCCESS
        }
    }
}
