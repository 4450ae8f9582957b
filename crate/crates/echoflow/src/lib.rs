//! File formats, run configuration and commands around `echoflow-core`.
//!
//! - [`csv_io`]: the packet-record CSV.
//! - [`formats`]: JSON documents for datasets, binnings, models and reports.
//! - [`export`]: representation and result exports (CSV and compact binary).
//! - [`config`]: flat `key = value` run configuration.
//! - [`manifest`]: per-run manifests chained by config hash.
//! - [`commands`]: the `echoflow` subcommands.

pub mod commands;
pub mod config;
pub mod csv_io;
pub mod error;
pub mod export;
pub mod formats;
pub mod manifest;

pub use config::RunConfig;
pub use error::{IoError, Result};
