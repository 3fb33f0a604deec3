use thiserror::Error;

/// Every failure mode reported by the toolkit.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum SymplError {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("matrix is not symmetric (max asymmetry {0:.3e})")]
    NotSymmetric(f64),
    #[error("matrix is not symplectic (residual {0:.3e})")]
    NotSymplectic(f64),
    #[error("matrix is not positive definite")]
    NotPositiveDefinite,
    #[error("argument norm {0:.3e} exceeds the supported range")]
    RangeError(f64),
    #[error("M + Id/2 is singular")]
    SingularShift,
    #[error("Id - S is singular")]
    SingularIdMinusS,
    #[error("Id - T is singular")]
    SingularIdMinusT,
    #[error("Id - S_b S_b' is singular")]
    SingularLocalProduct,
    #[error("matrix is rank deficient (rank {rank} < {expected})")]
    RankDeficient { rank: usize, expected: usize },
    #[error("covariance matrix is singular")]
    SingularCovariance,
    #[error("no positive semidefinite environment reproduces the noise (min eigenvalue {0:.3e})")]
    NoPhysicalEnv(f64),
    #[error("feedforward block S_(h,z') is singular (condition number {0:.3e})")]
    SingularFeedforward(f64),
    #[error("blockwise mismatch at modes {0:?}")]
    BlockwiseMismatch(Vec<usize>),
    #[error("genericity failure: {0}")]
    GenericityFailure(String),
    #[error("response matrix is singular at theta = {0}")]
    SingularResponse(f64),
    #[error("Sigma is singular")]
    SingularSigma,
    #[error("ill-conditioned solve (residual {0:.3e})")]
    IllConditionedSolve(f64),
    #[error("singular factor (smallest singular value {0:.3e})")]
    SingularFactor(f64),
    #[error("nonpositive quantity {0} at index {1}")]
    NonPositive(f64, usize),
    #[error("resolvent is singular")]
    SingularResolvent,
    #[error("Clifford assembly is singular")]
    SingularAssembly,
    #[error("block is not invertible modulo {0}")]
    NonInvertibleBlock(u64),
    #[error("modulus mismatch: {0} vs {1}")]
    ModulusMismatch(u64, u64),
    #[error("unknown gate: {0}")]
    UnknownGate(String),
    #[error("channel is not completely positive (min eigenvalue {0:.3e})")]
    NotCompletelyPositive(f64),
}

impl SymplError {
    /// Short machine-readable tag, used by the CLI error JSON.
    pub fn kind(&self) -> &'static str {
        match self {
            SymplError::DimensionMismatch(_) => "DimensionMismatch",
            SymplError::InvalidArgument(_) => "InvalidArgument",
            SymplError::NotSymmetric(_) => "NotSymmetric",
            SymplError::NotSymplectic(_) => "NotSymplectic",
            SymplError::NotPositiveDefinite => "NotPositiveDefinite",
            SymplError::RangeError(_) => "RangeError",
            SymplError::SingularShift => "SingularShift",
            SymplError::SingularIdMinusS => "SingularIdMinusS",
            SymplError::SingularIdMinusT => "SingularIdMinusT",
            SymplError::SingularLocalProduct => "SingularLocalProduct",
            SymplError::RankDeficient { .. } => "RankDeficient",
            SymplError::SingularCovariance => "SingularCovariance",
            SymplError::NoPhysicalEnv(_) => "NoPhysicalEnv",
            SymplError::SingularFeedforward(_) => "SingularFeedforward",
            SymplError::BlockwiseMismatch(_) => "BlockwiseMismatch",
            SymplError::GenericityFailure(_) => "GenericityFailure",
            SymplError::SingularResponse(_) => "SingularResponse",
            SymplError::SingularSigma => "SingularSigma",
            SymplError::IllConditionedSolve(_) => "IllConditionedSolve",
            SymplError::SingularFactor(_) => "SingularFactor",
            SymplError::NonPositive(..) => "NonPositive",
            SymplError::SingularResolvent => "SingularResolvent",
            SymplError::SingularAssembly => "SingularAssembly",
            SymplError::NonInvertibleBlock(_) => "NonInvertibleBlock",
            SymplError::ModulusMismatch(..) => "ModulusMismatch",
            SymplError::UnknownGate(_) => "UnknownGate",
            SymplError::NotCompletelyPositive(_) => "NotCompletelyPositive",
        }
    }
}

pub type Result<T> = std::result::Result<T, SymplError>;
