use thiserror::Error;

/// Errors raised by the model, the signal chain and the file formats.
#[derive(Debug, Error)]
pub enum Error {
    #[error("reflection point lies within {tolerance:e} m of a node")]
    DegeneratePoint { tolerance: f64 },

    #[error("reflector trajectory hits a node at t = {time} s")]
    ReflectorHitsNode { time: f64 },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("{function}: argument {value} outside domain {domain}")]
    Domain {
        function: &'static str,
        value: f64,
        domain: &'static str,
    },

    #[error("insufficient data: need at least {needed} samples, got {got}")]
    InsufficientData { needed: usize, got: usize },

    #[error("no spectral bin falls inside the band [{low} Hz, {high} Hz]")]
    BandEmpty { low: f64, high: f64 },

    #[error("non-finite measurement at index {index}")]
    NonFinite { index: usize },

    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },

    #[error("filter order {order} cannot meet the template: {achieved_db:.2} dB attenuation at the stopband edge, {required_db} dB required")]
    InfeasibleFilter {
        order: usize,
        achieved_db: f64,
        required_db: f64,
    },

    #[error("empty estimate series")]
    EmptySeries,

    #[error("timestamps must be strictly increasing (index {index})")]
    NonMonotonicTime { index: usize },

    #[error("{0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// True for errors caused by bad input rather than a failed computation.
    pub fn is_validation(&self) -> bool {
        matches!(
            self,
            Error::InvalidConfig(_)
                | Error::Domain { .. }
                | Error::Format(_)
                | Error::Json(_)
                | Error::NonMonotonicTime { .. }
                | Error::InsufficientData { .. }
                | Error::BandEmpty { .. }
                | Error::LengthMismatch { .. }
                | Error::InfeasibleFilter { .. }
        )
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
