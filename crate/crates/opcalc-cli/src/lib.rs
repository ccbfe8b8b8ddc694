//! Command-line front end for the `opcalc` engine.
//!
//! The binary exposes the engine's constructions as nine subcommands and
//! three output formats. Everything here is deterministic: the same
//! arguments produce the same bytes on every run, independent of the thread
//! count, so recorded outputs can be replayed byte for byte with
//! `--seed-corpus`.
//!
//! Exit codes: `0` on success, `2` for invalid input (bad flags, malformed
//! files, out-of-range windows), `3` when an internal algebraic check fails
//! (an inconsistent presentation, a broken axiom, a mismatched replay).

use thiserror::Error;

pub mod cli;
pub mod commands;
pub mod input;
pub mod output;

/// Classified command failure; the variant fixes the process exit code.
#[derive(Debug, Error)]
pub enum CliError {
    /// Invalid input: exits with code 2.
    #[error("{0}")]
    Usage(String),
    /// An internal algebraic check failed: exits with code 3.
    #[error("{0}")]
    Axiom(String),
}
