use thiserror::Error;

use crate::operators::HilbertSpace;

#[derive(Debug, Error)]
pub enum Error {
    #[error("operands live on different spaces: {left} vs {right}")]
    SpaceMismatch {
        left: HilbertSpace,
        right: HilbertSpace,
    },

    #[error("matrix of shape {rows}x{cols} does not fit a space of dimension {dim}")]
    ShapeMismatch { rows: usize, cols: usize, dim: usize },

    #[error("operator is not Hermitian (max |A - A†| = {residual:e})")]
    NotHermitian { residual: f64 },

    #[error("invalid density operator: {0}")]
    InvalidDensity(String),

    #[error("invalid projector: {0}")]
    InvalidProjector(String),

    #[error("site {site} out of range for {spins} spins")]
    SiteOutOfRange { site: usize, spins: usize },

    #[error("{spins} spins exceeds the dense cap of {cap}")]
    TooManySpins { spins: usize, cap: usize },

    #[error("dimension {dim} exceeds the cap of {cap}")]
    DimensionCap { dim: usize, cap: usize },

    #[error("rank {rank} is outside 1..={sector_dim}")]
    InvalidRank { rank: usize, sector_dim: usize },

    #[error("m = {m} is not a J^z eigenvalue for {spins} spins")]
    NotAnEigenvalue { m: f64, spins: usize },

    #[error("signal-to-noise undefined: Var(O) = {variance:e} vanishes")]
    ZeroVariance { variance: f64 },

    #[error(
        "theorem hypotheses violated: sector residual {sector:e}, \
         |PGP| = {diagonal:e}, |PGQ + QGP - G| = {completion:e}"
    )]
    HypothesisViolation {
        sector: f64,
        diagonal: f64,
        completion: f64,
    },

    #[error("local term {index} does not act on a single site")]
    NonLocalTerm { index: usize },

    #[error("invalid Hamiltonian: {0}")]
    InvalidHamiltonian(String),

    #[error("truncation k_max = {k_max} insufficient: <G²> differs by {discrepancy:e}")]
    TruncationInsufficient { k_max: usize, discrepancy: f64 },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("eigensolver failed to converge")]
    Eigensolver,

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
