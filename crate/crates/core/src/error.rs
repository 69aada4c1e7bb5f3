use std::io;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("matrix is not unitary (deviation {deviation:.3e})")]
    NotUnitary { deviation: f64 },

    #[error("invalid gate index {0} (expected 1..=24)")]
    InvalidGate(u32),

    #[error("unknown gate token `{0}`")]
    UnknownToken(String),

    #[error("group closure violated: G{left}·G{right} matches {matches} elements")]
    ClosureViolation {
        left: usize,
        right: usize,
        matches: usize,
    },

    #[error("sequence length {len} exceeds limit {limit}")]
    LengthExceeded { len: usize, limit: usize },

    #[error("window length {len} does not match database length {lprime}")]
    WindowLength { len: usize, lprime: usize },

    #[error("database budget of {budget} entries exceeded while building length {length} (complete through length {completed})")]
    BudgetExceeded {
        budget: usize,
        length: usize,
        completed: usize,
    },

    #[error("exhaustive search is capped at length {cap}, got {requested}")]
    ExhaustiveCap { cap: usize, requested: usize },

    #[error("bad database file: {0}")]
    BadMagic(String),

    #[error("unsupported database format version {found} (expected {expected})")]
    VersionMismatch { found: u16, expected: u16 },

    #[error("database file truncated: {0}")]
    Truncated(String),

    #[error("database checksum mismatch (stored {stored:#018x}, computed {computed:#018x})")]
    Checksum { stored: u64, computed: u64 },

    #[error("invalid target `{spec}`: {reason}")]
    Target { spec: String, reason: String },

    #[error("fixture {name}: expected {expected} gates, transcribed {found}")]
    Fixture {
        name: String,
        expected: usize,
        found: usize,
    },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error(transparent)]
    Io(#[from] io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}
