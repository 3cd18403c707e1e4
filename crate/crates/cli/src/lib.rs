//! Library half of the `ontopurify` binary: argument parsing, subcommands
//! and the retrieval benchmark.

pub mod bench;
pub mod cli;

pub use cli::{Cli, Command, Failure};
