//! Command-line sweeps and file output for the driven nonlinear coupler.
//!
//! Every data command writes CSV with a `#` header echoing the resolved
//! configuration, the version and the column units, followed by `#`
//! summary lines. `physical` writes JSON.

pub mod commands;
pub mod config;
pub mod format;
pub mod pool;
