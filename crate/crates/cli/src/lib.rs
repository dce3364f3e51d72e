//! Command-line front end for the `cross_tasep` experiments.

pub mod args;
pub mod record;
mod run;

use std::ffi::OsString;
use std::fs::File;
use std::io::{self, BufWriter, Write};

use clap::error::ErrorKind;
use clap::Parser;

pub use args::Cli;
pub use record::{Cell, ExperimentResult, ExperimentSpec, Format};
pub use run::{execute, params, validate, CliError};

/// Exit status of a verification that ran but failed.
pub const EXIT_VERIFICATION: i32 = 2;

fn emit(cli: &Cli, result: &ExperimentResult) -> Result<(), CliError> {
    let out: Box<dyn Write> = match &cli.output {
        Some(path) => Box::new(BufWriter::new(
            File::create(path)
                .map_err(|source| CliError::Io { context: format!("cannot create {}", path.display()), source })?,
        )),
        None => Box::new(io::stdout().lock()),
    };
    let written = match cli.format {
        Format::Csv => result.write_csv(out).map_err(|e| e.to_string()),
        Format::Json => result.write_json(out).map_err(|e| e.to_string()),
    };
    written.map_err(|e| CliError::Io { context: "cannot write output".into(), source: io::Error::other(e) })
}

/// Parses `args`, runs the command and returns the process exit code.
pub fn main_with<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
        }
    };
    if let Some(n) = cli.threads {
        if n == 0 {
            eprintln!("error: --threads must be positive");
            return 1;
        }
        // Fails only if a pool already exists, in which case it is kept.
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
    let result = match execute(&cli) {
        Ok(r) => r,
        Err(e) => {
            eprintln!("error: {e}");
            return e.exit_code();
        }
    };
    if let Err(e) = emit(&cli, &result) {
        eprintln!("error: {e}");
        return e.exit_code();
    }
    if result.passed {
        0
    } else {
        eprintln!("verification failed");
        EXIT_VERIFICATION
    }
}
