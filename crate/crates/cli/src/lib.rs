//! Batch command-line front end for the `smallworld` library.
//!
//! Every output file embeds the tool version and the fully resolved command,
//! including the seed; `--replay FILE` reruns that command and reproduces the
//! file byte for byte.

pub mod args;
pub mod commands;
pub mod error;
pub mod graph_file;
pub mod output;

use std::ffi::OsString;

use clap::Parser;

pub use args::{Cli, Command};
pub use error::{CliError, ExitKind};

/// Parses `args` and runs the command; returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { ExitKind::Usage as i32 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match dispatch(cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.code()
        }
    }
}

fn dispatch(cli: Cli) -> Result<(), CliError> {
    if let Some(threads) = cli.threads {
        if threads == 0 {
            return Err(CliError::usage("--threads must be positive"));
        }
        // the global pool can only be built once per process; later calls keep it
        let _ = rayon::ThreadPoolBuilder::new().num_threads(threads).build_global();
    }
    let mut cmd = match (cli.replay, cli.command) {
        (Some(path), None) => {
            let mut cmd = output::embedded_command(&path)?;
            if let Some(out) = cli.replay_out {
                commands::set_out(&mut cmd, out);
            }
            cmd
        }
        (None, Some(cmd)) => cmd,
        (Some(_), Some(_)) => return Err(CliError::usage("--replay cannot be combined with a command")),
        (None, None) => return Err(CliError::usage("a command or --replay FILE is required (see --help)")),
    };
    commands::resolve_seeds(&mut cmd);
    let mut timer = commands::Timer::new(cli.timings);
    commands::execute(&cmd, &mut timer)
}
