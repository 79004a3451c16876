use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error("Q = {q} is below the required 5·{degree} = {min}", min = 5 * degree)]
    DegenerateQ { q: u64, degree: usize },

    #[error("sign test failed on bracket {index} ({lo}, {hi})")]
    BracketViolation { index: usize, lo: String, hi: String },

    #[error("precision exhausted: {0}")]
    PrecisionExhausted(String),

    #[error("coordinates {first} and {second} collide at working precision")]
    Collision { first: usize, second: usize },

    #[error("interval violation: {0}")]
    Interval(String),

    #[error("resonance at frequency {m}: every channel's kernel coefficient vanishes")]
    Resonance { m: i64 },

    #[error("Fourier coefficient {m} is required but not supplied")]
    MissingBand { m: i64 },

    #[error(
        "degenerate theory parameters: n_M = {n_m:.4}, j0 = {j0}, J = {j_max} (need J > j0); \
         practical mode avoids the n_M penalty"
    )]
    DegenerateTheory { n_m: f64, j0: i32, j_max: i32 },

    #[error("degenerate levels: j0 = {j0}, J = {j_max} for n = {n}")]
    DegenerateLevels { n: u64, j0: i32, j_max: i32 },

    #[error("anti-aliasing: N = {n} must be at least 2^(J+3) = {required}")]
    AntiAliasing { n: usize, required: usize },

    #[error("unknown signal {0:?}")]
    UnknownSignal(String),

    #[error("need at least {needed} points, got {got}")]
    InsufficientPoints { needed: usize, got: usize },

    #[error("malformed artifact {path}: {reason}")]
    Artifact { path: PathBuf, reason: String },

    #[error("I/O error on {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Short machine-readable tag.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::InvalidArgument(_) => "invalid-argument",
            Error::Parse(_) => "parse",
            Error::DegenerateQ { .. } => "degenerate-q",
            Error::BracketViolation { .. } => "bracket-violation",
            Error::PrecisionExhausted(_) => "precision-exhausted",
            Error::Collision { .. } => "collision",
            Error::Interval(_) => "interval-violation",
            Error::Resonance { .. } => "resonance",
            Error::MissingBand { .. } => "missing-band",
            Error::DegenerateTheory { .. } => "degenerate-theory-parameters",
            Error::DegenerateLevels { .. } => "degenerate-levels",
            Error::AntiAliasing { .. } => "anti-aliasing",
            Error::UnknownSignal(_) => "unknown-signal",
            Error::InsufficientPoints { .. } => "insufficient-points",
            Error::Artifact { .. } => "malformed-artifact",
            Error::Io { .. } => "io",
            Error::Json(_) => "json",
        }
    }
}
