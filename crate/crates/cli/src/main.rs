mod args;
mod commands;
mod help_json;
mod io;
mod run_config;

use std::process::ExitCode;

use clap::{CommandFactory, Parser};

use args::Cli;

fn exit_code(err: &anyhow::Error) -> u8 {
    for cause in err.chain() {
        if let Some(e) = cause.downcast_ref::<ctxdecode::Error>() {
            return if e.is_validation() { 2 } else { 1 };
        }
    }
    1
}

/// The reader went away (`ctxdecode ... | head`); not a failure.
fn broken_pipe(err: &anyhow::Error) -> bool {
    use std::io::ErrorKind::BrokenPipe;
    err.chain().any(|c| {
        c.downcast_ref::<std::io::Error>()
            .is_some_and(|e| e.kind() == BrokenPipe)
            || c.downcast_ref::<serde_json::Error>().and_then(|e| e.io_error_kind()) == Some(BrokenPipe)
    })
}

fn init_logging(verbose: u8, quiet: bool) {
    let level = match (quiet, verbose) {
        (true, _) => "error",
        (false, 0) => "warn",
        (false, 1) => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level))
        .format_timestamp(None)
        .target(env_logger::Target::Stderr)
        .init();
}

fn main() -> ExitCode {
    if std::env::args_os().skip(1).any(|a| a == "--help-json") {
        let doc = help_json::describe(&Cli::command());
        let _ = io::print_line(&serde_json::to_string_pretty(&doc).expect("help serializes"));
        return ExitCode::SUCCESS;
    }
    let cli = Cli::parse();
    init_logging(cli.global.verbose, cli.global.quiet);
    match commands::run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) if broken_pipe(&err) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(exit_code(&err))
        }
    }
}
