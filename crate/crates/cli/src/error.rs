use thiserror::Error;
use wigvol_core::Error as CoreError;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config: {0}")]
    Config(String),
    #[error("numeric guard: {0}")]
    Numeric(CoreError),
    #[error("schema mismatch: {0}")]
    SchemaMismatch(String),
    #[error("{0} check(s) failed")]
    VerifyFailed(usize),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
}

impl CliError {
    /// 2 for bad input, 3 for a numeric guard, 1 for failed checks.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) | CliError::SchemaMismatch(_) => 2,
            CliError::Numeric(_) => 3,
            CliError::VerifyFailed(_) => 1,
            CliError::Io(_) => 2,
        }
    }
}

/// Guards raised by the numeric engines, as opposed to rejected input.
pub fn is_numeric_guard(e: &CoreError) -> bool {
    matches!(
        e,
        CoreError::CutoffTooSmall(_)
            | CoreError::UnderResolved(_)
            | CoreError::ImaginaryResidue(_)
            | CoreError::NonIntegrable(_)
            | CoreError::InsufficientSupport(_)
            | CoreError::QuadratureBudget(_)
            | CoreError::SingularPoint(_)
    )
}

impl From<CoreError> for CliError {
    fn from(e: CoreError) -> Self {
        if is_numeric_guard(&e) {
            CliError::Numeric(e)
        } else {
            CliError::Config(e.to_string())
        }
    }
}

pub type Result<T> = std::result::Result<T, CliError>;

/// Attach the config field a core error came from.
pub fn at<T>(field: &str, r: wigvol_core::Result<T>) -> Result<T> {
    r.map_err(|e| match CliError::from(e) {
        CliError::Config(m) => CliError::Config(format!("{field}: {m}")),
        other => other,
    })
}
