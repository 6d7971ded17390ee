use thiserror::Error;

/// Errors raised by the simulation and analysis routines.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("state is not normalized (norm² = {norm_sq})")]
    NotNormalized { norm_sq: f64 },

    #[error("unsupported local dimension {0}")]
    UnsupportedDim(usize),

    #[error("site index out of range: {0}")]
    InvalidSites(String),

    #[error("invalid region: {0}")]
    InvalidRegion(String),

    #[error("invalid Pauli label '{0}'")]
    InvalidLabel(char),

    #[error("matrix is not unitary (deviation {deviation:e})")]
    NotUnitary { deviation: f64 },

    #[error("density matrix invariant violated: {0}")]
    InvalidDensityMatrix(String),

    #[error("negative eigenvalue {0:e} below tolerance")]
    NegativeEigenvalue(f64),

    #[error("Majorana correlation singular value {0} exceeds 1")]
    SingularValueTooLarge(f64),

    #[error("size limit exceeded: {0}")]
    SizeLimit(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("series grids differ: {0}")]
    GridMismatch(String),

    #[error("channel invariant violated: {0}")]
    ChannelInvariant(String),

    #[error("degenerate or defective spectrum: {0}")]
    DegenerateSpectrum(String),

    #[error("invariant drift during evolution: {0}")]
    InvariantDrift(String),
}

pub type Result<T> = std::result::Result<T, Error>;
