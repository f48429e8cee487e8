use thiserror::Error;

/// Domain errors shared by every module.
///
/// Each variant has a stable upper-case name (see [`LatticeError::name`]) that
/// the command-line front end prints on the diagnostic stream.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum LatticeError {
    #[error("vectors belong to different lattices ({0} vs {1})")]
    LatticeMismatch(String, String),
    #[error("coordinate vector has length {got}, lattice rank is {rank}")]
    RankMismatch { got: usize, rank: usize },
    #[error("gram matrix must be square and non-empty")]
    NotSquare,
    #[error("gram matrix is not symmetric at ({0}, {1})")]
    NotSymmetric(usize, usize),
    #[error("diagonal entry {value} at index {index} is odd; only even lattices are supported")]
    OddDiagonal { index: usize, value: i64 },
    #[error("n must be at least 2, got {0}")]
    InvalidN(i64),
    #[error("zero vector has no divisibility or orbit")]
    ZeroVector,
    #[error("vector is not primitive (content {0})")]
    NotPrimitive(i128),
    #[error("gram matrix is degenerate")]
    DegenerateLattice,
    #[error("integer overflow in exact arithmetic")]
    Overflow,
    #[error("lattice {0} is not declared eligible for the orbit criterion")]
    NotEligible(String),
    #[error("reflection root must have square -2 or 2, got {0}")]
    InvalidRoot(i128),
    #[error("orbit invariant is not realizable: {0}")]
    NotRealizable(String),
    #[error("lattice {0} is not of the form U + ... + <-2(n-1)> with e last")]
    NotBbfLayout(String),
    #[error("no MBM table for n = {0}")]
    UnsupportedN(i64),
    #[error("class has nonnegative square {0}")]
    NonNegativeClass(String),
    #[error("span is not hyperbolic: signature ({pos}, {neg}, {zero})")]
    NotHyperbolic { pos: usize, neg: usize, zero: usize },
    #[error("class pairs to zero with wall {0}")]
    OnWall(String),
    #[error("classes are not in one component of the positive cone")]
    NotPositive,
    #[error("fiber class has nonzero e-coefficient")]
    NotInUnimodularPart,
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

impl LatticeError {
    pub fn name(&self) -> &'static str {
        match self {
            LatticeError::LatticeMismatch(..) => "LATTICE_MISMATCH",
            LatticeError::RankMismatch { .. } => "RANK_MISMATCH",
            LatticeError::NotSquare => "NOT_SQUARE",
            LatticeError::NotSymmetric(..) => "NOT_SYMMETRIC",
            LatticeError::OddDiagonal { .. } => "ODD_DIAGONAL",
            LatticeError::InvalidN(_) => "INVALID_N",
            LatticeError::ZeroVector => "ZERO_VECTOR",
            LatticeError::NotPrimitive(_) => "NOT_PRIMITIVE",
            LatticeError::DegenerateLattice => "DEGENERATE",
            LatticeError::Overflow => "OVERFLOW",
            LatticeError::NotEligible(_) => "NOT_ELIGIBLE",
            LatticeError::InvalidRoot(_) => "INVALID_ROOT",
            LatticeError::NotRealizable(_) => "NOT_REALIZABLE",
            LatticeError::NotBbfLayout(_) => "NOT_BBF_LAYOUT",
            LatticeError::UnsupportedN(_) => "UNSUPPORTED_N",
            LatticeError::NonNegativeClass(_) => "NONNEGATIVE_CLASS",
            LatticeError::NotHyperbolic { .. } => "NOT_HYPERBOLIC",
            LatticeError::OnWall(_) => "ON_WALL",
            LatticeError::NotPositive => "NOT_POSITIVE",
            LatticeError::NotInUnimodularPart => "NOT_IN_UNIMODULAR_PART",
            LatticeError::InvalidArgument(_) => "INVALID_ARGUMENT",
        }
    }
}

pub type Result<T> = std::result::Result<T, LatticeError>;
