//! Seeded Monte-Carlo experiments and the closed-form validation suite.
//!
//! Every random draw comes from a stream keyed by `(seed, purpose, grid
//! point, trial)`, so results do not depend on thread scheduling and the
//! sequential and parallel executions produce identical reports.

pub mod config;
pub mod exec;
pub mod experiments;
pub mod link;
pub mod report;
pub mod stats;
pub mod validation;

pub use config::{config_hash, Absorption, Calibration, ExperimentConfig, Propagation, Variant};
pub use exec::{par_map, stream, Execution};
pub use experiments::{run_ber_vs_power, run_ber_vs_snr, run_ee_vs_beta, run_energy_vs_n, run_tx_events};
pub use report::{ExperimentReport, ReportRow};
pub use validation::{analyze, run_matched_model, run_validation_suite, MatchedPoint, ValidationCheck, ValidationReport};
