use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{what} out of domain: {value}")]
    Domain { what: &'static str, value: f64 },

    #[error("frequency {freq_hz} Hz outside absorption table span [{lo_hz}, {hi_hz}] Hz")]
    Extrapolation { freq_hz: f64, lo_hz: f64, hi_hz: f64 },

    #[error("link state {0} has no SNR")]
    NoSnr(&'static str),

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParam { name: &'static str, reason: String },

    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("exhaustive search needs {assignments:.3e} assignments, budget is {budget}")]
    BudgetExceeded { assignments: f64, budget: u64 },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn param(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParam { name, reason: reason.into() }
    }

    pub(crate) fn domain(what: &'static str, value: f64) -> Self {
        Error::Domain { what, value }
    }
}
