//! Command-line front end and file formats for the trade network analysis.
//!
//! The heavy lifting lives in `wtn-core`; this crate adds registries and
//! trade-record ingestion, run configuration, and deterministic CSV/JSON
//! artifact emission with a checksum manifest.

pub mod commands;
pub mod config;
pub mod ingest;
pub mod output;

pub use commands::run;

/// Exit code policy: 2 for missing files, 1 for everything else.
pub fn exit_code(err: &anyhow::Error) -> i32 {
    if err.downcast_ref::<ingest::MissingFile>().is_some() {
        2
    } else {
        1
    }
}
