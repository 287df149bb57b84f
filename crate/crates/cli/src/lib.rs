//! Command-line front end for the `qmeter` simulations.
//!
//! [`parse_args`] turns flags and an optional `key = value` config file into a
//! [`RunConfig`]; [`execute`] runs it, writes CSV or JSON and returns the
//! process exit code (0 success, 1 numerical validity failure, 2 bad config).

pub mod args;
pub mod run;

pub use args::{parse_args, parse_args_with, parse_config_text, parse_range, ParseError, RunConfig, Subcommand, Task};
pub use run::{execute, run, RunError, RunSummary};
