use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Every failure surfaced by the toolkit. Variants that signal a falsified
/// hypothesis (as opposed to bad input) are reported by
/// [`Error::is_hypothesis_failure`].
#[derive(Debug, Clone, Error)]
pub enum Error {
    #[error("point does not belong to the domain: {0}")]
    DomainMismatch(String),

    #[error("operation is not available on a {0} domain")]
    UnsupportedDomain(&'static str),

    #[error("invalid problem: {0}")]
    InvalidProblem(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("inner minimization diverged at lambda = {lambda} (iterate norm exceeded {bound})")]
    Diverged { lambda: f64, bound: f64 },

    #[error("feasibility window is empty: lower = {lower}, upper = {upper}")]
    WindowEmpty { lower: String, upper: String },

    #[error("constraint value {r} lies outside the open window ]{lower}, {upper}[")]
    WindowViolation { r: f64, lower: String, upper: String },

    #[error("bracketing failed for r = {r}: {reason}")]
    BracketFailure {
        r: f64,
        reason: String,
        /// `(lambda, phi(y_lambda))` pairs evaluated before giving up.
        samples: Vec<(f64, f64)>,
    },

    #[error("dual problem requires a >= 0, got a = {a}")]
    DualInapplicable { a: String },

    #[error("level-set retraction failed: {0}")]
    RetractionFailure(String),

    #[error("syntax error at byte {offset}: {message}")]
    SyntaxError { offset: usize, message: String },

    #[error("unknown identifier `{name}` at byte {offset}")]
    UnknownIdentifier { name: String, offset: usize },

    #[error("function `{name}` at byte {offset} takes exactly one argument")]
    ArityError { name: String, offset: usize },

    #[error("expression domain error: {0}")]
    EvaluationDomain(String),

    #[error("table error: {0}")]
    Table(String),

    #[error("i/o error: {0}")]
    Io(String),
}

impl Error {
    /// Stable machine-readable code, identical to the variant name.
    pub fn code(&self) -> &'static str {
        match self {
            Error::DomainMismatch(_) => "DomainMismatch",
            Error::UnsupportedDomain(_) => "UnsupportedDomain",
            Error::InvalidProblem(_) => "InvalidProblem",
            Error::InvalidArgument(_) => "InvalidArgument",
            Error::Diverged { .. } => "Diverged",
            Error::WindowEmpty { .. } => "WindowEmpty",
            Error::WindowViolation { .. } => "WindowViolation",
            Error::BracketFailure { .. } => "BracketFailure",
            Error::DualInapplicable { .. } => "DualInapplicable",
            Error::RetractionFailure(_) => "RetractionFailure",
            Error::SyntaxError { .. } => "SyntaxError",
            Error::UnknownIdentifier { .. } => "UnknownIdentifier",
            Error::ArityError { .. } => "ArityError",
            Error::EvaluationDomain(_) => "EvaluationDomain",
            Error::Table(_) => "Table",
            Error::Io(_) => "Io",
        }
    }

    /// True for outcomes that report a failed hypothesis of the method
    /// rather than a usage or input error.
    pub fn is_hypothesis_failure(&self) -> bool {
        matches!(
            self,
            Error::Diverged { .. }
                | Error::WindowEmpty { .. }
                | Error::WindowViolation { .. }
                | Error::BracketFailure { .. }
                | Error::DualInapplicable { .. }
                | Error::RetractionFailure(_)
        )
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        Error::Table(e.to_string())
    }
}
