use std::fmt;

use thiserror::Error;

/// Result alias used throughout the crate.
pub type Result<T, E = Error> = std::result::Result<T, E>;

/// A model or operator that failed one of its structural laws.
///
/// `field` names the offending part (`"pi"`, `"transitions.b"`, `"column 1"`),
/// `index` carries the position when one applies and `spectrum` holds the
/// eigenvalues of the accumulated `Σ K†K` for column-law failures.
#[derive(Debug, Clone, PartialEq)]
pub struct Violation {
    pub field: String,
    pub index: Option<usize>,
    pub message: String,
    pub spectrum: Option<Vec<f64>>,
}

impl Violation {
    pub fn new(field: impl Into<String>, message: impl Into<String>) -> Self {
        Violation {
            field: field.into(),
            index: None,
            message: message.into(),
            spectrum: None,
        }
    }

    pub fn at(mut self, index: usize) -> Self {
        self.index = Some(index);
        self
    }

    pub fn with_spectrum(mut self, spectrum: Vec<f64>) -> Self {
        self.spectrum = Some(spectrum);
        self
    }

    /// Prefix the field path, e.g. `column 1` becomes `transitions.a: column 1`.
    pub fn within(mut self, parent: &str) -> Self {
        self.field = format!("{parent}: {}", self.field);
        self
    }
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.field)?;
        if let Some(i) = self.index {
            write!(f, "[{i}]")?;
        }
        write!(f, ": {}", self.message)?;
        if let Some(spec) = &self.spectrum {
            write!(f, " (spectrum of sum K^dag K: [")?;
            for (k, v) in spec.iter().enumerate() {
                if k > 0 {
                    write!(f, ", ")?;
                }
                write!(f, "{v:.12}")?;
            }
            write!(f, "])")?;
        }
        Ok(())
    }
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("shape error: {0}")]
    Shape(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("invalid input: {0}")]
    Input(String),

    #[error("validation failed: {0}")]
    Validation(Violation),

    #[error("model is not Viterbi-eligible: {0}; use brute_force_viterbi instead")]
    Ineligible(String),

    #[error("resource limit exceeded: {0}")]
    Resource(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

impl From<Violation> for Error {
    fn from(v: Violation) -> Self {
        Error::Validation(v)
    }
}

pub(crate) fn shape(msg: impl Into<String>) -> Error {
    Error::Shape(msg.into())
}
