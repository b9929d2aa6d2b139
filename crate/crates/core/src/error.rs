//! Error type shared by every module.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("site {site} out of range for {n_qubits} qubits")]
    SiteOutOfRange { site: usize, n_qubits: usize },
    #[error("site {0} listed twice in a Pauli term")]
    DuplicateSite(usize),
    #[error("cannot parse Pauli term `{0}`")]
    PauliParse(String),
    #[error("matrix is not Hermitian (max deviation {0:e})")]
    NotHermitian(f64),
    #[error("eigensolver did not converge")]
    EigenNoConvergence,
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("spectral function returned a non-finite value at eigenvalue {0}")]
    NonFiniteFunction(f64),
    #[error("invalid density matrix: {0}")]
    InvalidState(String),
    #[error("ground state is degenerate (gap {0:e})")]
    DegenerateGroundState(f64),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("observable must be a Pauli string with unit coefficient")]
    NonUnitaryObservable,
    #[error("operator is not invertible (smallest |eigenvalue| {0:e})")]
    NotInvertible(f64),
    #[error("{0} dimensions exceed the supported prime table")]
    TooManyDimensions(usize),
    #[error("Halton index must be at least 1")]
    HaltonIndexZero,
    #[error("uniform coordinate {0} outside the open unit interval")]
    UniformOutOfRange(f64),
    #[error("K = {k} is too small for the {rule} rule in {dims} dimensions")]
    GridTooSmall { k: usize, rule: &'static str, dims: usize },
    #[error("empty point set")]
    EmptyPointSet,
    #[error("expectation value {0} lies outside [-1, 1]")]
    ExpectationOutOfRange(f64),
    #[error("shot count must be at least 1")]
    ZeroShots,
    #[error("reference grid too coarse on axis {axis}: spacing {spacing:e}, need below {required:e} (reference_k >= {min_k})")]
    ReferenceGridTooCoarse { axis: usize, spacing: f64, required: f64, min_k: usize },
    #[error("configuration error: {0}")]
    Config(String),
    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),
    #[error("CSV error: {0}")]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
