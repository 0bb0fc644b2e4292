use thiserror::Error;

use crate::analysis::PbhCertificate;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("matrix must be square, got {rows}x{cols}")]
    NotSquare { rows: usize, cols: usize },

    #[error("dimension mismatch in {context}: expected {expected}, got {actual}")]
    DimensionMismatch {
        context: &'static str,
        expected: String,
        actual: String,
    },

    #[error("non-finite entry in {0}")]
    NonFinite(&'static str),

    #[error("eigenvalue iteration did not converge for a {0}x{0} matrix")]
    NoConvergence(usize),

    #[error("invalid polynomial: {0}")]
    InvalidPolynomial(&'static str),

    #[error("transfer function is not strictly proper (deg num = {num}, deg den = {den})")]
    NotStrictlyProper { num: usize, den: usize },

    #[error("{line}:{column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("targets are not closed under complex conjugation: {0}")]
    NotConjugateClosed(String),

    #[error("pair is not controllable: {0}")]
    Uncontrollable(Box<PbhCertificate>),

    #[error("pair is not observable: {0}")]
    Unobservable(Box<PbhCertificate>),

    #[error("singular linear system in {0}")]
    Singular(&'static str),

    #[error("target selection infeasible: {0}")]
    Infeasible(String),

    #[error("decay rate undefined: {0}")]
    UndefinedRate(&'static str),
}

impl Error {
    pub(crate) fn mismatch(
        context: &'static str,
        expected: impl ToString,
        actual: impl ToString,
    ) -> Self {
        Error::DimensionMismatch {
            context,
            expected: expected.to_string(),
            actual: actual.to_string(),
        }
    }
}
