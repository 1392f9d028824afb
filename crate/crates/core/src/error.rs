use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("divergent parameters: {0}")]
    DivergentParameters(String),

    #[error("series did not converge: tail bound {bound:e} above tolerance {tol:e} after {terms} terms")]
    NonConvergent { terms: usize, bound: f64, tol: f64 },

    #[error("coordinate index {index} out of range for dimension {dim}")]
    IndexOutOfRange { index: usize, dim: usize },

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("box of {cells} cells exceeds the cap of {cap}")]
    BoxTooLarge { cells: u128, cap: u128 },

    #[error("Stirling number s({n}, {k}) is outside the tabulated range")]
    OutOfTabulatedRange { n: usize, k: usize },

    #[error("coordinate {coord} is identically zero; drop it and refit with r - 1 coordinates")]
    DegenerateData { coord: usize },

    #[error("not enough observations: {n_obs} rows for {n_params} free parameters")]
    TooFewObservations { n_obs: usize, n_params: usize },

    #[error("optimizer did not converge after {iterations} iterations")]
    DidNotConverge { iterations: usize },

    #[error("observed information matrix is singular")]
    SingularInformation,

    #[error("grid of {points} points exceeds the cap of {cap}")]
    GridTooLarge { points: usize, cap: usize },

    #[error("line {line}: {message}")]
    Csv { line: u64, message: String },
}
