//! Command-line front end for `geopeg`.

pub mod cli;
pub mod commands;
pub mod config;
pub mod error;

use std::ffi::OsString;
use std::io::Write;

pub use config::RunConfig;
pub use error::{CliError, Result};

/// Parses `args`, runs the chosen subcommand and returns the exit code.
pub fn run<I, T>(args: I, out: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let matches = match cli::command().try_get_matches_from(args) {
        Ok(m) => m,
        Err(e) => {
            let code = if e.use_stderr() {
                error::EXIT_CONFIG
            } else {
                error::EXIT_OK
            };
            let _ = e.print();
            return code;
        }
    };
    let Some((name, sub)) = matches.subcommand() else {
        return error::EXIT_CONFIG;
    };
    let result = cli::resolve(sub).and_then(|c| commands::dispatch(name, sub, &c, out));
    match result {
        Ok(()) => error::EXIT_OK,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
