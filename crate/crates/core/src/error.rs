use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("grid mismatch between operands")]
    GridMismatch,

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("bad magic")]
    BadMagic,

    #[error("unsupported field file version {0}")]
    UnsupportedVersion(u8),

    #[error("rank mismatch: expected {expected}, found {found}")]
    RankMismatch { expected: String, found: u8 },

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("truncated payload: expected {expected} bytes, found {found}")]
    Truncated { expected: usize, found: usize },

    #[error("mollifier under-resolved: delta {delta} is below grid spacing {spacing}")]
    MollifierUnderResolved { delta: f64, spacing: f64 },

    #[error("not curl-free: sup norm of curl is {max_curl:e}")]
    NotCurlFree { max_curl: f64 },

    #[error("interpolation outside box at radius {radius}")]
    OutsideBox { radius: f64 },

    #[error("plane must be axis-aligned")]
    PlaneNotAxisAligned,

    #[error("frame not orthonormal")]
    FrameNotOrthonormal,

    #[error("degenerate complex frequency: h^2 lambda = {0} must be below 1")]
    DegenerateFrequency(f64),

    #[error("characteristic variety hit; choose different grid offset or h (min |symbol| = {min_symbol:e})")]
    CharacteristicVariety { min_symbol: f64 },

    #[error("solver did not converge after {iterations} iterations (relative residual {residual:e})")]
    NonConvergence {
        iterations: usize,
        residual: f64,
        history: Vec<f64>,
    },

    #[error("off shell: |xi| = {norm} outside ({lower}, {upper})")]
    OffShell { norm: f64, lower: f64, upper: f64 },

    #[error("t = {t} at or below branch threshold {threshold}")]
    BelowThreshold { t: f64, threshold: f64 },

    #[error("gauge-reduce first: magnetic potentials differ (max difference {0:e})")]
    GaugeMismatch(f64),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
