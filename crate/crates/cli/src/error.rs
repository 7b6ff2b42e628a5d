use thiserror::Error;

/// Failure classes, each with its own exit status.
#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Validation(String),
    #[error("{0}")]
    NonConvergence(String),
    #[error("{0}")]
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Validation(_) => 2,
            CliError::NonConvergence(_) => 3,
            CliError::Io(_) => 4,
        }
    }
}

impl From<jlsampler::Error> for CliError {
    fn from(e: jlsampler::Error) -> Self {
        use jlsampler::Error as E;
        let msg = e.to_string();
        match e {
            E::Param(_) | E::Shape { .. } | E::Calibration { .. } | E::Parse { .. } => CliError::Validation(msg),
            E::Numerical(_) | E::EigenConvergence { .. } | E::ConstantMisestimate { .. } | E::Divergence { .. } => {
                CliError::NonConvergence(msg)
            }
            E::Io(_) => CliError::Io(msg),
        }
    }
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> Self {
        CliError::Validation(format!("config: {e}"))
    }
}

pub type CliResult<T> = Result<T, CliError>;
