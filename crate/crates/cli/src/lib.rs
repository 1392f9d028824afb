//! Command-line front end for the `ugat` library.

pub mod args;
pub mod docs;
pub mod error;
pub mod model;
pub mod run;

pub use args::Cli;
pub use error::{CliError, CliResult};
pub use run::{run, Output};
