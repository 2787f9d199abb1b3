use std::process::ExitCode;

use clap::Parser;

mod cli;
mod commands;
mod error;
mod output;
mod params;

use cli::{Cli, Command, EXPERIMENTS};
use commands::{algebra, execute, measures, variational};
use error::CliError;

fn dispatch(command: Command) -> Result<bool, CliError> {
    match command {
        Command::VerifyAlgebra(a) => execute("verify-algebra", &a.common, |p, s| algebra::verify_algebra(&a, p, s)),
        Command::VerifyNulllag(a) => execute("verify-nulllag", &a.common, |p, s| algebra::verify_nulllag(&a, p, s)),
        Command::Structure(a) => execute("structure", &a.common, |p, s| measures::structure(&a, p, s)),
        Command::Jensen(a) => execute("jensen", &a.common, |p, s| measures::jensen(&a, p, s)),
        Command::Kr(a) => execute("kr", &a.common, |p, s| measures::kr(&a, p, s)),
        Command::Tightness(a) => execute("tightness", &a.common, |p, s| measures::tightness(&a, p, s)),
        Command::Minimize(a) => execute("minimize", &a.common, |p, s| variational::minimize_cmd(&a, p, s)),
        Command::Gap(a) => execute("gap", &a.common, |p, s| variational::gap(&a, p, s)),
        Command::WeakMinors(a) => execute("weak-minors", &a.common, |p, s| variational::weak_minors(&a, p, s)),
    }
}

fn main() -> ExitCode {
    let args: Vec<String> = std::env::args().collect();
    if let Some(name) = args.get(1) {
        if !name.starts_with('-') && name != "help" && !EXPERIMENTS.contains(&name.as_str()) {
            eprintln!("error: unknown experiment `{name}`; valid names: {}", EXPERIMENTS.join(", "));
            return ExitCode::from(2);
        }
    }
    let cli = match Cli::try_parse_from(&args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(2) } else { ExitCode::SUCCESS };
        }
    };
    match dispatch(cli.command) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(3),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
