use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("insufficient channels: need {needed}, pool has {available}")]
    InsufficientChannels { needed: usize, available: usize },

    #[error("channel {0} is not in the reserve list")]
    NotInReserve(usize),

    #[error("unknown FAP id {0}")]
    UnknownFap(usize),

    #[error("interference threshold {threshold_dbm:.2} dBm is above the strongest achievable received power {max_dbm:.2} dBm")]
    ThresholdNotInvertible { threshold_dbm: f64, max_dbm: f64 },

    #[error("empty sample set")]
    EmptySamples,

    #[error("malformed CSV at line {line}: {reason}")]
    Csv { line: usize, reason: String },

    #[error("replica {replica} (seed {seed}) failed: {source}")]
    Replica {
        replica: usize,
        seed: u64,
        #[source]
        source: Box<Error>,
    },

    #[error("mismatched comparison pair: {0}")]
    MismatchedPair(String),
}

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidArgument(msg.into())
}
