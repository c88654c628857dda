use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// An argument lies outside the domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// The configured enumeration budget would be exceeded.
    #[error("enumeration budget exceeded: {what} needs about {needed} items, cap is {cap}")]
    Budget { what: String, needed: f64, cap: u64 },

    /// An experiment configuration is inconsistent.
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    /// A scan window did not contain enough data to decide.
    #[error("inconclusive scan: {0}")]
    Inconclusive(String),
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub(crate) fn config(msg: impl Into<String>) -> Self {
        Error::InvalidConfig(msg.into())
    }
}

pub type Result<T> = std::result::Result<T, Error>;

/// Upper bound on the number of items an enumeration may materialize.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Budget(pub u64);

impl Budget {
    /// Environment variable read by [`Budget::from_env`].
    pub const ENV_VAR: &'static str = "ANNULI_ENUM_BUDGET";

    /// Cap from `ANNULI_ENUM_BUDGET` if it is set and parses, default otherwise.
    pub fn from_env() -> Self {
        std::env::var(Self::ENV_VAR)
            .ok()
            .and_then(|s| s.trim().parse::<u64>().ok())
            .map(Budget)
            .unwrap_or_default()
    }

    pub fn check(self, what: &str, needed: f64) -> Result<()> {
        if needed.is_finite() && needed <= self.0 as f64 {
            Ok(())
        } else {
            Err(Error::Budget {
                what: what.to_string(),
                needed,
                cap: self.0,
            })
        }
    }
}

impl Default for Budget {
    fn default() -> Self {
        Budget(50_000_000)
    }
}
