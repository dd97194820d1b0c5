use std::process::ExitCode;

use clap::Parser;
use tracing_subscriber::EnvFilter;

use plotwire_server::cli::{self, Cli, CliError, Command};

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            // Usage errors count as validation failures.
            return ExitCode::from(if e.use_stderr() { 3 } else { 0 });
        }
    };
    tracing_subscriber::fmt()
        .with_env_filter(EnvFilter::try_from_env("PLOTWIRE_LOG").unwrap_or_else(|_| EnvFilter::new("info")))
        .with_writer(std::io::stderr)
        .init();

    let result = match &cli.command {
        Command::Serve(args) => run_serve(args),
        Command::Plot(args) => cli::plot(args),
        Command::Convert(args) => cli::convert(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            for line in e.to_string().lines() {
                eprintln!("error: {line}");
            }
            ExitCode::from(e.exit_code())
        }
    }
}

fn run_serve(args: &cli::ServeArgs) -> Result<(), CliError> {
    let rt = tokio::runtime::Runtime::new().map_err(|e| CliError::Io(format!("starting runtime: {e}")))?;
    rt.block_on(cli::serve(args, cli::shutdown_signal(), |addr| {
        eprintln!("listening on http://{addr}");
    }))
}
