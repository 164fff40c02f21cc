use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("no sign change in [{lo}, {hi}]: f(lo) = {f_lo:e}, f(hi) = {f_hi:e}")]
    NoBracket { lo: f64, hi: f64, f_lo: f64, f_hi: f64 },

    #[error("no root: {0}")]
    NoRoot(String),

    #[error("root finder did not converge after {iterations} iterations; best estimate {best} in [{lo}, {hi}]")]
    NotConverged {
        iterations: usize,
        best: f64,
        lo: f64,
        hi: f64,
    },

    #[error(
        "memory length {memory} exceeds the enumeration cap {cap} (2^{} ISI sequences); \
         increase the symbol interval or raise the cap",
        memory - 1
    )]
    EnumerationCap { memory: usize, cap: usize },
}

impl Error {
    pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }
}
