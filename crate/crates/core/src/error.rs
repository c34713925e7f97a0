use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// Input data failed validation; the report carries the individual findings.
    #[error("invalid input: {0}")]
    Validation(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// A row of a linear program has the wrong width or a non-finite entry.
    #[error("malformed linear program: {0}")]
    MalformedProgram(String),

    /// Basis enumeration would exceed the configured limit.
    #[error("vertex enumeration needs {bases} bases, limit is {limit}")]
    TooManyBases { bases: u128, limit: u128 },

    /// The instrument does not move treatment, so ratio estimands are undefined.
    #[error("weak instrument: |P(X=1|Z=1) - P(X=1|Z=0)| = {0:.3e}")]
    WeakInstrument(f64),

    /// Scenario parameters describe an impossible population.
    #[error("invalid scenario: {0}")]
    Scenario(String),
}

pub type Result<T> = std::result::Result<T, Error>;
