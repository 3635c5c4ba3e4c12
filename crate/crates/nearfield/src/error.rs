use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("validation: {0}")]
    Validation(String),

    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    /// A chirp or propagator phase is undersampled on the named axis.
    #[error("aliasing on axis {axis}: {detail}")]
    Aliasing { axis: usize, detail: String },

    #[error("probe: {0}")]
    Probe(String),

    #[error("flat field nearly vanishes: min {min:.3e} < {threshold:.3e}")]
    DivisionByNearZero { min: f64, threshold: f64 },

    #[error("support extends outside the reconstruction disc: {0}")]
    Support(String),

    #[error("phase wrap: k*R(delta) = {value:.6} at theta = {theta:.6} rad, x = {x:.6}")]
    PhaseWrap { theta: f64, x: f64, value: f64 },

    #[error("transmission modulus {0:.3e} below 1e-14, logarithm undefined")]
    ZeroTransmission(f64),

    #[error("solver: {0}")]
    Solver(String),

    #[error("size budget exceeded: {0}")]
    Budget(String),

    #[error("io: {0}")]
    Io(#[from] std::io::Error),

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),

    #[error("file format: {0}")]
    Format(String),
}
