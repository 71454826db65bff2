use std::io::{self, IsTerminal};
use std::net::SocketAddr;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use vita_cli::repl::{format_error, Repl};
use vita_core::load::{load_csv_path, LoadOptions};
use vita_core::ops::text::STOPWORDS;
use vita_core::VitaError;

#[derive(Parser)]
#[command(name = "vita", version, about = "In-situ visual text analytics")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(clap::Args)]
struct Input {
    /// CSV file to load.
    csv: PathBuf,
    /// Columns to type as Text (comma separated or repeated).
    #[arg(long, value_delimiter = ',')]
    text_columns: Vec<String>,
    /// Write each new chart as <DIR>/<view>.vl.json.
    #[arg(long, value_name = "DIR")]
    emit_charts: Option<PathBuf>,
    /// Persist the version store under DIR.
    #[arg(long, value_name = "DIR")]
    session_dir: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Read operator commands from stdin.
    Repl(Input),
    /// Apply every command of a workflow file, stopping at the first error.
    Run {
        workflow: PathBuf,
        #[command(flatten)]
        input: Input,
    },
    /// Serve the HTTP and WebSocket API.
    Serve {
        #[arg(long, default_value = "127.0.0.1:7878")]
        addr: SocketAddr,
        /// Persist sessions under DIR/<session id>.
        #[arg(long, value_name = "DIR")]
        session_dir: Option<PathBuf>,
    },
    /// Print the stopword list used by remove_stopwords.
    Stopwords,
}

fn open(input: &Input) -> Result<Repl, VitaError> {
    let frame = load_csv_path(&input.csv, &LoadOptions::default().with_text_columns(input.text_columns.clone()))?;
    Repl::new(frame, input.session_dir.as_deref(), input.emit_charts.clone())
}

fn main() -> ExitCode {
    match Cli::parse().command {
        Command::Repl(input) => {
            let mut repl = match open(&input) {
                Ok(r) => r,
                Err(e) => {
                    eprintln!("{}", format_error(&e));
                    return ExitCode::FAILURE;
                }
            };
            let prompt = io::stdin().is_terminal();
            match repl.drive(io::stdin().lock(), io::stdout().lock(), prompt, false) {
                Ok(_) => ExitCode::SUCCESS,
                Err(e) => {
                    eprintln!("{e}");
                    ExitCode::FAILURE
                }
            }
        }
        Command::Run { workflow, input } => {
            let script = match std::fs::File::open(&workflow) {
                Ok(f) => io::BufReader::new(f),
                Err(e) => {
                    eprintln!("{}: {e}", workflow.display());
                    return ExitCode::FAILURE;
                }
            };
            let mut repl = match open(&input) {
                Ok(r) => r,
                Err(e) => {
                    eprintln!("{}", format_error(&e));
                    return ExitCode::FAILURE;
                }
            };
            match repl.drive(script, io::stdout().lock(), false, true) {
                Ok(Ok(())) => ExitCode::SUCCESS,
                Ok(Err(msg)) => {
                    eprintln!("{}: {msg}", workflow.display());
                    ExitCode::FAILURE
                }
                Err(e) => {
                    eprintln!("{e}");
                    ExitCode::FAILURE
                }
            }
        }
        Command::Serve { addr, session_dir } => {
            let runtime = tokio::runtime::Runtime::new().expect("tokio runtime");
            match runtime.block_on(vita_cli::server::serve(addr, session_dir)) {
                Ok(()) => ExitCode::SUCCESS,
                Err(e) => {
                    eprintln!("{addr}: {e}");
                    ExitCode::FAILURE
                }
            }
        }
        Command::Stopwords => {
            for w in STOPWORDS {
                println!("{w}");
            }
            ExitCode::SUCCESS
        }
    }
}
