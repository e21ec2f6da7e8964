use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid mode space: {0}")]
    InvalidSpace(String),

    #[error("mode index {mode} out of range for a space with {modes} modes")]
    ModeOutOfRange { mode: usize, modes: usize },

    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("operators act on different mode spaces ({left:?} vs {right:?})")]
    SpaceMismatch { left: Vec<usize>, right: Vec<usize> },

    #[error("channel count mismatch: {left} vs {right}")]
    ChannelMismatch { left: usize, right: usize },

    #[error("scattering matrix is not unitary (deviation {0:e})")]
    NonUnitary(f64),

    #[error("operator is not Hermitian (deviation {0:e})")]
    NonHermitian(f64),

    #[error("density matrix trace is {0}, expected 1")]
    NotNormalized(f64),

    #[error("invalid parameter `{field}`: {reason}")]
    InvalidParameter { field: &'static str, reason: String },

    #[error("cubic leading coefficient vanishes; use the linear (chi = 0) branch")]
    DegenerateCubic,

    #[error("mean-field relaxation did not converge at epsilon = {epsilon} (|rhs| = {residual:e} after t = {time})")]
    NoConvergence { epsilon: f64, residual: f64, time: f64 },

    #[error("mean-field state diverged at epsilon = {epsilon}")]
    Diverged { epsilon: f64 },

    #[error("steady state is not unique: two smallest singular values {smallest:e} and {second:e}")]
    DegenerateNullSpace { smallest: f64, second: f64 },

    #[error("steady state violates {what}: {value:e}")]
    SteadyStateInvariant { what: &'static str, value: f64 },

    #[error("g2 undefined: mean photon number {0:e} is below 1e-12")]
    VacuumState(f64),

    #[error("weak-drive linear system is singular")]
    SingularSystem,

    #[error("closed-form g2 is singular at these parameters")]
    ClosedFormSingular,

    #[error("occupation P1 must be positive, got {0:e}")]
    ZeroOccupation(f64),

    #[error("truncation limit {dims:?} reached without convergence")]
    TruncationCap { dims: Vec<usize> },

    #[error("linear algebra failure: {0}")]
    Numerical(String),
}
