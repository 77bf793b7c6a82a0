//! Command-line driver and annotation server.

pub mod cli;
pub mod commands;
pub mod failure;
pub mod report;
pub mod run;
pub mod server;

pub use cli::Cli;
pub use failure::{exit_code, Failure};
