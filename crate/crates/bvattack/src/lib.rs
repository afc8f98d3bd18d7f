//! File formats, reports, a parallel trial runner and the `bvattack`
//! command line on top of `bvattack-core`.

pub mod chisq;
pub mod cli;
pub mod error;
pub mod formats;
pub mod report;
pub mod runner;

pub use error::CliError;
