use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid rate {0}: exponential clocks need a positive rate")]
    InvalidRate(f64),
    #[error("unsupported domain mode: {0}")]
    UnsupportedMode(&'static str),
    #[error("ordering violated: {0}")]
    Ordering(String),
    #[error("topology error: {0}")]
    Topology(String),
    #[error("invalid domain: {0}")]
    InvalidDomain(String),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("initial state inconsistent with process: {0}")]
    InconsistentInitial(String),
    #[error("sample time {time} lies outside [0, {horizon}]")]
    SampleBeyondHorizon { time: f64, horizon: f64 },
    #[error("no finite number of interactions suffices when mu = 0")]
    NoFiniteInteractions,
    #[error("bracket [{lo}, {hi}] does not straddle the decision level (freq {freq_lo} at lo)")]
    Bracketing { lo: f64, hi: f64, freq_lo: f64 },
    #[error("search cap reached: {0}")]
    SearchCap(String),
}

pub type Result<T> = std::result::Result<T, Error>;
