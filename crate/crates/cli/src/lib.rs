//! Library surface of the `rgscalelab` command line: config parsing,
//! experiment execution and output writing. The binary in `main.rs` is a
//! thin wrapper; integration tests drive these modules directly.

pub mod config;
pub mod output;
pub mod runner;
