//! Library surface of the `glad` binary: PGM I/O, manifest construction,
//! and the command implementations, split out so integration tests can
//! drive them in-process.

pub mod commands;
pub mod error;
pub mod manifest;
pub mod pgm;

pub use error::CliError;
pub use manifest::{Cli, RunManifest};

/// Parse, validate, and run one invocation.
pub fn run_cli(cli: Cli) -> Result<(), CliError> {
    let manifest = RunManifest::from_cli(cli)?;
    commands::run(&manifest)
}
