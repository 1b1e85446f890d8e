use thiserror::Error;

/// Errors raised by the codec, the analysis routines and the simulator.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// An argument is outside the domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// A channel specification could not be parsed.
    #[error("invalid channel specification near `{token}`: {reason}")]
    Parse { token: String, reason: String },

    /// The typical window admits no weight vector.
    #[error("empty typical window for symbol {symbol}: {reason}")]
    EmptyWindow { symbol: String, reason: String },

    /// Too many weight classes to enumerate.
    #[error("{classes} admitted weight classes exceed the enumeration cap of {cap}; use sampling-based operations")]
    Capacity { classes: u64, cap: u64 },

    /// Every admitted class rounds down to zero codewords.
    #[error("rate zero: every admitted weight class rounds to zero codewords")]
    RateZero,

    /// The shared key has fewer bits left than requested.
    #[error("key underflow: needed {needed} bits, {available} available")]
    KeyUnderflow { needed: u64, available: u64 },

    /// The string has an admitted weight but is outside the keyed subset.
    #[error("not a codeword: {0}")]
    NotACodeword(String),

    /// The string's weight class is outside the typical window.
    #[error("atypical string: weight class {0} is not admitted")]
    AtypicalString(String),

    /// The Knill-Laflamme condition fails on the supplied code.
    #[error("not correctable on this code: pair ({i}, {j}) has residual {residual:e}")]
    NotCorrectable { i: usize, j: usize, residual: f64 },

    /// An internal consistency check failed.
    #[error("integrity failure: {0}")]
    Integrity(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn domain(msg: impl Into<String>) -> Error {
    Error::Domain(msg.into())
}
