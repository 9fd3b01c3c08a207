//! Error type shared by every module.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),
    #[error("overflow: {0}")]
    Overflow(String),
    #[error("orbit left the disc at step {step}: |z| = {modulus}")]
    Instability { step: usize, modulus: f64 },
    #[error("syntax error at byte {offset}: {message}")]
    Syntax { offset: usize, message: String },
    #[error("unknown identifier `{name}` at byte {offset}")]
    UnknownIdentifier { offset: usize, name: String },
    #[error("malformed literal at byte {offset}: {message}")]
    MalformedLiteral { offset: usize, message: String },
    #[error("seeds disagree: {0}")]
    Ambiguity(String),
    #[error("inconclusive: {0}")]
    Inconclusive(String),
    #[error("degenerate: {0}")]
    Degenerate(String),
    #[error("precondition failed: {0}")]
    Precondition(String),
    #[error("corpus: {0}")]
    Corpus(String),
    #[error("io: {0}")]
    Io(String),
    #[error("{0}")]
    Usage(String),
}

impl Error {
    /// Stable machine-readable code used in reports and the C ABI.
    pub fn code(&self) -> &'static str {
        match self {
            Error::Domain(_) => "domain",
            Error::Overflow(_) => "overflow",
            Error::Instability { .. } => "instability",
            Error::Syntax { .. } => "syntax",
            Error::UnknownIdentifier { .. } => "unknown_identifier",
            Error::MalformedLiteral { .. } => "malformed_literal",
            Error::Ambiguity(_) => "ambiguity",
            Error::Inconclusive(_) => "inconclusive",
            Error::Degenerate(_) => "degenerate",
            Error::Precondition(_) => "precondition",
            Error::Corpus(_) => "corpus",
            Error::Io(_) => "io",
            Error::Usage(_) => "usage",
        }
    }

    /// Byte offset for parse diagnostics.
    pub fn offset(&self) -> Option<usize> {
        match self {
            Error::Syntax { offset, .. }
            | Error::UnknownIdentifier { offset, .. }
            | Error::MalformedLiteral { offset, .. } => Some(*offset),
            _ => None,
        }
    }

    pub fn is_parse(&self) -> bool {
        self.offset().is_some()
    }

    /// Parse diagnostics and invalid command-line values.
    pub fn is_usage(&self) -> bool {
        self.is_parse() || matches!(self, Error::Usage(_))
    }
}
