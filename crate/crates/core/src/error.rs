use thiserror::Error;

/// Errors raised anywhere in the simulator.
#[derive(Debug, Error)]
pub enum Error {
    #[error("non-finite value in {0}")]
    NonFinite(&'static str),

    #[error("invalid parameter `{field}`: {reason}")]
    InvalidParam { field: &'static str, reason: String },

    #[error("step size underflow at t = {t} (h = {h:e}); the system is too stiff for the explicit integrator")]
    StepUnderflow { t: f64, h: f64 },

    #[error("state became non-finite at t = {t}")]
    NonFiniteState { t: f64 },

    #[error("singular steady-state system (condition estimate {condition:e})")]
    Singular { condition: f64 },

    #[error("series too short: need at least {needed} samples after the cutoff, got {got}")]
    SeriesTooShort { needed: usize, got: usize },

    #[error("hysteresis {branch} branch failed at step {step}: {source}")]
    Sweep {
        branch: &'static str,
        step: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("config error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// True for failures of the numerics, as opposed to bad input or I/O.
    pub fn is_numerical(&self) -> bool {
        match self {
            Error::StepUnderflow { .. }
            | Error::NonFiniteState { .. }
            | Error::Singular { .. }
            | Error::SeriesTooShort { .. }
            | Error::NonFinite(_) => true,
            Error::Sweep { source, .. } => source.is_numerical(),
            _ => false,
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn ensure_finite(value: f64, what: &'static str) -> Result<()> {
    if value.is_finite() {
        Ok(())
    } else {
        Err(Error::NonFinite(what))
    }
}
