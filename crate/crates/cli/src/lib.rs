//! Front-end plumbing for the `ypcap` binary: config files, table
//! loading, subcommand dispatch, run manifests. All physics lives in
//! `ypcap-core`; this crate only moves numbers between files and the
//! drivers.

pub mod commands;
pub mod config;
pub mod table_io;

pub use commands::{execute, CliError, Command, Overrides};
pub use config::{parse_config, parse_config_str, to_ini, ConfigError, RunConfig};
