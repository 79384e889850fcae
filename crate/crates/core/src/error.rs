use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// A scalar argument violated its domain (negative power, gain below 1, ...).
    #[error("invalid {name}: {value} ({reason})")]
    InvalidArgument {
        name: &'static str,
        value: f64,
        reason: &'static str,
    },

    #[error("mode layout powers do not sum to the total: isolated + split = {sum} W, total = {total} W")]
    PowerBookkeeping { sum: f64, total: f64 },

    #[error("SNL normalization undefined: total detected power is zero")]
    ZeroPower,

    #[error("covariance matrix is not positive semidefinite (pivot {pivot} = {value:e})")]
    NotPositiveSemidefinite { pivot: usize, value: f64 },

    #[error("displacement {displacement:e} m exceeds the linear range of the split detector ({limit:e} m)")]
    OutOfLinearRange { displacement: f64, limit: f64 },

    #[error("insufficient samples: {available} available, at least {required} required")]
    InsufficientSamples { required: usize, available: usize },

    #[error("signal frequency {frequency} Hz is outside the usable trace span")]
    PeakAtEdge { frequency: f64 },

    #[error("sample rate {sample_rate} Hz must exceed twice the analysis band edge {band_edge} Hz")]
    Undersampled { sample_rate: f64, band_edge: f64 },

    #[error("unknown {kind} '{value}' (expected one of: {expected})")]
    UnknownVariant {
        kind: &'static str,
        value: String,
        expected: &'static str,
    },

    #[error("target {target_db} dB is not reachable (attainable range {min_db} to {max_db} dB)")]
    Unattainable {
        target_db: f64,
        min_db: f64,
        max_db: f64,
    },

    #[error("invalid range: {0}")]
    InvalidRange(String),

    #[error("invalid quantity '{text}': {reason}")]
    Quantity { text: String, reason: String },

    #[error("config error: {0}")]
    Config(String),

    #[error("i/o error: {0}")]
    Io(String),
}

impl Error {
    pub(crate) fn invalid(name: &'static str, value: f64, reason: &'static str) -> Self {
        Error::InvalidArgument {
            name,
            value,
            reason,
        }
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        Error::Io(e.to_string())
    }
}
