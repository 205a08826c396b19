use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("Fock cutoff must be at least 2, got {0}")]
    CutoffTooSmall(usize),

    #[error("every tensor factor must have dimension >= 2, got {0:?}")]
    InvalidDims(Vec<usize>),

    #[error("dimension mismatch: expected {expected:?}, found {found:?}")]
    DimensionMismatch {
        expected: Vec<usize>,
        found: Vec<usize>,
    },

    #[error("matrix of size {rows}x{cols} does not match space dimension {dim}")]
    ShapeMismatch { rows: usize, cols: usize, dim: usize },

    #[error("operator is not Hermitian (max |M - M^dag| = {0:.3e})")]
    NotHermitian(f64),

    #[error("invalid density matrix: {0}")]
    InvalidState(String),

    #[error("dispersive construction requires a nonzero qubit-ensemble detuning")]
    ZeroDetuning,

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error(
        "time step {dt:.3e} us violates the stability guard for omega_max = {omega_max:.4e} rad/us \
         (dt * omega_max = {product:.3}); use at least {required_steps} steps"
    )]
    StepGuard {
        dt: f64,
        omega_max: f64,
        product: f64,
        required_steps: usize,
    },

    #[error("time grids differ")]
    GridMismatch,

    #[error("state space of dimension {dim} exceeds the full-model cap of {cap}")]
    SpaceTooLarge { dim: usize, cap: usize },

    #[error("density matrix lost positivity at t = {t:.6} us (min eigenvalue {min_eig:.3e})")]
    PositivityViolation { t: f64, min_eig: f64 },

    #[error("trace drifted to {trace_err:.3e} at t = {t:.6} us")]
    TraceDrift { t: f64, trace_err: f64 },
}
