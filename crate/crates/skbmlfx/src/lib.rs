//! File formats, experiment harness and command-line interface for `skbmlfx-core`.

pub mod cli;
pub mod config;
pub mod harness;
pub mod io;
pub mod stats;
