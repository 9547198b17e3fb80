use thiserror::Error;

/// Errors produced by the simulation library.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("unsupported spin quantum number {0} (expected 1/2 or 1)")]
    UnsupportedSpin(f64),

    #[error("kronecker product needs at least one factor")]
    EmptyFactorList,

    #[error("matrix data of length {len} is not square")]
    NotSquare { len: usize },

    #[error("matrix is not hermitian (max deviation {deviation:e}, allowed {allowed:e})")]
    NotHermitian { deviation: f64, allowed: f64 },

    #[error("matrix is not symmetric (max deviation {0:e})")]
    NotSymmetric(f64),

    #[error("dimension {dim} exceeds the supported maximum of {max}")]
    DimensionTooLarge { dim: usize, max: usize },

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("eigensolver did not converge after {sweeps} sweeps (off-diagonal norm {off_norm:e})")]
    NoConvergence { sweeps: usize, off_norm: f64 },

    #[error("invalid spin system: {0}")]
    InvalidSystem(String),

    #[error("unknown nuclear-spin family `{0}`")]
    UnknownFamily(String),

    #[error("operating point too close to a level anticrossing: |D {sign} gamma_e B| = {gap} MHz")]
    NearAnticrossing { sign: char, gap: f64 },

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("time grid is not uniform (step deviation {0:e})")]
    NonUniformGrid(f64),

    #[error("empty grid")]
    EmptyGrid,

    #[error("least-squares design matrix is rank deficient")]
    RankDeficient,

    #[error("value {value} out of range {min}..={max}")]
    OutOfRange { value: i64, min: i64, max: i64 },
}

pub type Result<T> = std::result::Result<T, Error>;
