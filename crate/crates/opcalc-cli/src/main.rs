//! Binary entry point; all behavior lives in the library.

use std::process::ExitCode;

fn main() -> ExitCode {
    opcalc_cli::cli::cli_main()
}
