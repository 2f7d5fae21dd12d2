//! Command-line front end: TOML experiment files with unit-suffixed values,
//! subcommand dispatch, and CSV/JSON result files.

// `!(x > 0.0)` is used on purpose so that NaN fails validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod run;
pub mod units;
