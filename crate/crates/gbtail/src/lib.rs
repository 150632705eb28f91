//! File formats, ingestion, reports and the command-line front end for the
//! [`gbtail_core`] tail-analysis kernel.

pub mod analysis;
pub mod bundle;
pub mod cli;
pub mod config;
pub mod error;
pub mod ingest;
pub mod report;
pub mod samplefile;

pub use error::{Error, Result};
pub use gbtail_core as core;
