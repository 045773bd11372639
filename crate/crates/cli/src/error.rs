use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("numerical failure: {0}")]
    Numerical(qst_core::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl CliError {
    /// 0 success, 2 invalid configuration, 3 numerical failure.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Numerical(_) => 3,
            CliError::Io(_) => 1,
        }
    }
}

impl From<qst_core::Error> for CliError {
    fn from(e: qst_core::Error) -> Self {
        use qst_core::Error as E;
        match e {
            E::InvalidSpec(_)
            | E::NoBoundState
            | E::Domain { .. }
            | E::NotNormalized(_)
            | E::InvalidDensityMatrix(_)
            | E::DegenerateSpectrum
            | E::WrongMetric => CliError::Config(e.to_string()),
            E::SolverFailure { .. }
            | E::StepSizeFailure { .. }
            | E::IntegratorFailure { .. }
            | E::AmbiguousEigenstate { .. }
            | E::NotFound { .. } => CliError::Numerical(e),
        }
    }
}
