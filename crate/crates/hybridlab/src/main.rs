use std::io::{self, BufWriter, Write};
use std::process::ExitCode;

use clap::{CommandFactory, Parser};
use hybridlab::cli::Cli;
use hybridlab::UsageError;

fn subcommand_help() -> Option<String> {
    let name = std::env::args().nth(1)?;
    let mut cmd = Cli::command();
    let sub = cmd.find_subcommand_mut(&name)?;
    Some(sub.render_help().to_string())
}

fn usage_failure(msg: &str) -> ExitCode {
    eprintln!("error: {msg}\n");
    if let Some(help) = subcommand_help() {
        eprint!("{help}");
    }
    ExitCode::from(2)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            if !e.use_stderr() {
                return ExitCode::SUCCESS;
            }
            if let Some(help) = subcommand_help() {
                eprint!("\n{help}");
            }
            return ExitCode::from(2);
        }
    };
    if let Err(e) = hybridlab::init_threads() {
        return usage_failure(&format!("{e:#}"));
    }
    let mut out = BufWriter::new(io::stdout().lock());
    let result = hybridlab::run(cli.command, &mut out).and_then(|()| Ok(out.flush()?));
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) if e.downcast_ref::<UsageError>().is_some() => usage_failure(&e.to_string()),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
