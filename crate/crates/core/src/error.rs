use thiserror::Error;

/// Errors raised by the numerical and algebraic routines in this crate.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("grid too coarse: sigma {sigma} < 3·dx = {min}")]
    GridTooCoarse { sigma: f64, min: f64 },

    #[error("state support overflows the grid: boundary tail {tail:e} exceeds {limit:e}")]
    SupportOverflow { tail: f64, limit: f64 },

    #[error("grid or physics configuration mismatch")]
    GridMismatch,

    #[error("superposition cancels to the zero vector (norm {norm:e})")]
    ZeroVector { norm: f64 },

    #[error("no grid point has density above the floor {floor:e}")]
    AllBelowFloor { floor: f64 },

    #[error("Wigner transform has imaginary residue {residue:e}")]
    ImaginaryResidue { residue: f64 },

    #[error("symbol is not band-limited: tail energy fraction {tail:e} exceeds {limit:e}")]
    BandLimit { tail: f64, limit: f64 },

    #[error("polynomial degree {degree} exceeds the supported maximum {max}")]
    Degree { degree: u32, max: u32 },

    #[error("operator is not supported on the leading half-block (outside weight {weight:e})")]
    Support { weight: f64 },

    #[error("valid mask too fragmented: no run with at least {min_run} points")]
    MaskFragmented { min_run: usize },

    #[error("phase jump of {jump} rad between time slices {slice} and {next} at x = {x}")]
    UnwrapDiscontinuity {
        slice: usize,
        next: usize,
        x: f64,
        jump: f64,
    },

    #[error("wavefunction touches the grid boundary at step {step}: edge mass {mass:e}")]
    BoundaryContact { step: usize, mass: f64 },

    #[error("field undersampled in time: relative change {change} between slices exceeds {limit}")]
    FieldUndersampled { change: f64, limit: f64 },

    #[error("too few trajectories ({got}); at least {need} required")]
    TooFewPaths { got: usize, need: usize },

    #[error("trajectory {path} left the valid mask of domain θ = {theta}")]
    ChartIncompatible { path: usize, theta: f64 },

    #[error("Clifford signature mismatch: ({0}, {1}) vs ({2}, {3})")]
    SignatureMismatch(u32, u32, u32, u32),

    #[error("algebra too large: p + q = {0} exceeds {1}")]
    SizeLimit(u32, u32),

    #[error("element is not invertible")]
    NonInvertible,

    #[error("idempotent set is not complete and orthogonal: {0}")]
    IncompleteSet(String),

    #[error("parse error at offset {offset}: {message}")]
    Parse { offset: usize, message: String },
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Error {
    Error::InvalidParameter {
        name,
        reason: reason.into(),
    }
}
