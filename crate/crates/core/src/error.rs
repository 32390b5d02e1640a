use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// An argument lies outside the domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// A parameter set, trace or distribution violates one of its invariants.
    #[error("validation error: {0}")]
    Validation(String),

    /// A file does not follow the expected layout.
    #[error("format error{}: {message}", line.map(|l| format!(" at line {l}")).unwrap_or_default())]
    Format { line: Option<usize>, message: String },

    /// The integrator produced a non-finite value.
    #[error("numerical error at sample {index}: {message}")]
    Numerical { index: usize, message: String },

    /// Two traces cannot be compared sample by sample.
    #[error("alignment error: {0}")]
    Alignment(String),

    /// The percentage error is undefined because every measured current is zero.
    #[error("undefined normalization: sum of |measured current| is zero")]
    UndefinedNormalization,

    /// Rejection sampling gave up on a parameter.
    #[error("distribution for {param} is infeasible: {attempts} draws violated its invariants")]
    InfeasibleDistribution { param: &'static str, attempts: usize },

    #[error("sensitivity probe failed for {param} at delta={delta}: {source}")]
    Probe {
        param: &'static str,
        delta: f64,
        #[source]
        source: Box<Error>,
    },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub(crate) fn validation(msg: impl Into<String>) -> Self {
        Error::Validation(msg.into())
    }

    pub(crate) fn format(line: Option<usize>, msg: impl Into<String>) -> Self {
        Error::Format {
            line,
            message: msg.into(),
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// True for failures that originate in the numerics rather than in the inputs.
    pub fn is_numerical(&self) -> bool {
        match self {
            Error::Numerical { .. } => true,
            Error::Probe { source, .. } => source.is_numerical(),
            _ => false,
        }
    }
}

pub(crate) fn ensure_finite(name: &str, value: f64) -> Result<()> {
    if value.is_finite() {
        Ok(())
    } else {
        Err(Error::domain(format!("{name} must be finite, got {value}")))
    }
}
