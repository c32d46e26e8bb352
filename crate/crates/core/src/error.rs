use thiserror::Error;

use crate::evolution::Trajectory;

pub type Result<T> = std::result::Result<T, Error>;

/// Why a running evolution was stopped.
#[derive(Debug, Clone, PartialEq)]
pub enum Trip {
    /// Mass fraction in the outer tenth of the box exceeded the threshold.
    BoundaryMass { fraction: f64, threshold: f64 },
    /// A NaN or infinity appeared in the field.
    NonFinite,
    /// Relative energy drift exceeded the abort threshold.
    EnergyDrift { drift: f64, threshold: f64 },
    /// The running Z-norm accumulator diverged ("Z-blowup suspected").
    ZBlowup { z_pow10: f64, threshold: f64 },
}

impl std::fmt::Display for Trip {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Trip::BoundaryMass {
                fraction,
                threshold,
            } => write!(
                f,
                "boundary mass fraction {fraction:.3e} exceeds {threshold:.3e}"
            ),
            Trip::NonFinite => write!(f, "non-finite field values"),
            Trip::EnergyDrift { drift, threshold } => {
                write!(f, "energy drift {drift:.3e} exceeds {threshold:.3e}")
            }
            Trip::ZBlowup { z_pow10, threshold } => write!(
                f,
                "Z-blowup suspected: accumulated Z^10 {z_pow10:.3e} exceeds {threshold:.3e}"
            ),
        }
    }
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("configuration error: {0}")]
    Config(String),

    #[error("non-finite input sample at r = {radius}")]
    NonFiniteSample { radius: f64 },

    #[error("shape mismatch: expected length {expected}, got {got}")]
    Shape { expected: usize, got: usize },

    #[error("unsupported exponent p = {0} (need 2 <= p < inf)")]
    UnsupportedExponent(f64),

    #[error(
        "phase resolution exceeded: per-cell phase increment {increment:.3} > pi at r = R; \
         need N >= {required_n}"
    )]
    Resolution { increment: f64, required_n: usize },

    #[error("singular time t = {0}: kernel undefined")]
    SingularTime(f64),

    #[error("usage error: {0}")]
    Usage(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("run stopped at t = {t}: {trip}")]
    Watchdog {
        trip: Trip,
        t: f64,
        /// Everything recorded up to and including the last good snapshot.
        partial: Box<Trajectory>,
    },

    #[error("checkpoint error: {0}")]
    Checkpoint(String),

    #[error("parse error at {location}: {message}")]
    Parse { location: String, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
