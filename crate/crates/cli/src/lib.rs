//! Experiment orchestration for `qst-core`: flat key-value configuration,
//! concurrent parameter sweeps, and CSV/JSON record output.

pub mod config;
mod error;
pub mod experiments;
pub mod record;

pub use config::{ExperimentConfig, ExperimentKind, Method, OutputFormat};
pub use error::CliError;
pub use experiments::{
    linear_fit, run, run_adiabaticity, run_eigen_flow, run_evolve, run_fidelity_sweep,
    run_min_time_vs_distance, run_operator_fidelity, run_robustness, run_spectrum,
};
pub use record::{ParamValue, SweepRecord};
