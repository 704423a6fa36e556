use std::path::PathBuf;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("basis of dimension {dim} needs ~{needed_mb} MB, over the {budget_mb} MB budget")]
    MemoryBudget { dim: usize, needed_mb: u64, budget_mb: u64 },

    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },

    #[error("state is not normalized (norm² = {norm_sq})")]
    NotNormalized { norm_sq: f64 },

    #[error("S_AB² + ΔP_AB² = {radius_sq} exceeds 1/4")]
    RadicandOutOfRange { radius_sq: f64 },

    #[error("eigensolver did not converge{}", .index.map(|i| format!(" (eigenpair {i})")).unwrap_or_default())]
    NoConvergence { index: Option<usize> },

    #[error("eigenpair {index} residual {residual:e} exceeds {bound:e}")]
    Residual { index: usize, residual: f64, bound: f64 },

    #[error("entropy identity violated at k={k}: |direct - decomposition| = {deviation:e}")]
    IdentityViolation { k: usize, deviation: f64 },

    #[error("index range {start}..{end} outside the available range 0..{limit}")]
    OutOfRange { start: usize, end: usize, limit: usize },

    #[error("{0}")]
    InsufficientData(String),

    #[error("least-squares fit is singular")]
    SingularFit,

    #[error("config line {line}: {reason}")]
    Config { line: usize, reason: String },

    #[error("cache file {path} is corrupt: {reason}")]
    CorruptCache { path: PathBuf, reason: String },

    #[error("output directory {path} is not writable: {source}")]
    OutputDir { path: PathBuf, source: std::io::Error },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }

    /// Process exit code used by the command-line driver.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::OutputDir { .. } | Error::Io(_) | Error::Config { .. } => 2,
            _ => 1,
        }
    }
}
