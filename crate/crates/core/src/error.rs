use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

/// Everything that can go wrong in the library.
///
/// Variants split into two families: input validation (a value violates a
/// type invariant or a file cannot be parsed) and computation failures (the
/// inputs are well formed but the requested quantity does not exist). The
/// `Display` output of every computation failure starts with a stable
/// kebab-case name so callers and scripts can match on it.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("parse error at line {line}: {reason}")]
    Parse { line: usize, reason: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error("degenerate-input: {0}")]
    DegenerateInput(String),

    #[error("ambiguous-extremum: {0}")]
    AmbiguousExtremum(String),

    #[error("fit-failure: {0}")]
    FitFailure(String),

    #[error("inconclusive-disambiguation: {0}")]
    InconclusiveDisambiguation(String),

    #[error("zero-total: all four coincidence counts of the quad at (θA={theta_a:.4}, θB={theta_b:.4}) are zero")]
    ZeroTotal { theta_a: f64, theta_b: f64 },
}

impl Error {
    pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }

    /// True for bad inputs, false for failures of the computation itself.
    pub fn is_validation(&self) -> bool {
        matches!(
            self,
            Error::InvalidParameter { .. } | Error::Parse { .. } | Error::Io(_)
        )
    }

    /// Stable short name for computation errors.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::InvalidParameter { .. } => "invalid-parameter",
            Error::Parse { .. } => "parse",
            Error::Io(_) => "io",
            Error::DegenerateInput(_) => "degenerate-input",
            Error::AmbiguousExtremum(_) => "ambiguous-extremum",
            Error::FitFailure(_) => "fit-failure",
            Error::InconclusiveDisambiguation(_) => "inconclusive-disambiguation",
            Error::ZeroTotal { .. } => "zero-total",
        }
    }
}
