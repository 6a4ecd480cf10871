//! `zsup`: command-line front end for the Z₂ⁿ-graded algebra engine.

mod commands;
mod report;
mod script;

use std::process::ExitCode;

use clap::Parser;

use commands::{Cli, Context};
use report::{CliError, Status};

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let mut ctx = match Context::from_options(&cli.opts, None) {
        Ok(ctx) => ctx,
        Err(e) => return finish(Err(e)),
    };
    finish(commands::execute(&mut ctx, &cli.command))
}

fn finish(result: Result<Status, CliError>) -> ExitCode {
    match result {
        Ok(Status::Passed) => ExitCode::SUCCESS,
        Ok(Status::Failed) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {}", e.message);
            ExitCode::from(e.exit_code())
        }
    }
}
