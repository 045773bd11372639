use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid parameters: {0}")]
    InvalidSpec(String),

    #[error("a defect energy of zero supports no bound state")]
    NoBoundState,

    #[error("{what} = {value} lies outside {range}")]
    Domain {
        what: &'static str,
        value: f64,
        range: String,
    },

    #[error("wavevector solver found {found} real roots, expected {expected}")]
    SolverFailure { found: usize, expected: usize },

    #[error("three-level spectrum is fully degenerate (both couplings vanish)")]
    DegenerateSpectrum,

    #[error("initial state is not normalized (norm² = {0})")]
    NotNormalized(f64),

    #[error("initial density matrix is invalid: {0}")]
    InvalidDensityMatrix(String),

    #[error("step halving changed {metric} by {change:e} (tolerance {tolerance:e})")]
    StepSizeFailure {
        metric: &'static str,
        change: f64,
        tolerance: f64,
    },

    #[error("integrator failure at t = {time}: {reason}")]
    IntegratorFailure { time: f64, reason: String },

    #[error("pure-state fidelity requested for a mixed-state trajectory")]
    WrongMetric,

    #[error("eigenvalue gap {gap:e} at the first excited state is below {threshold:e}")]
    AmbiguousEigenstate { gap: f64, threshold: f64 },

    #[error(
        "no transfer time in the search range reaches the target; best fidelity {best_fidelity}"
    )]
    NotFound { best_fidelity: f64 },
}
