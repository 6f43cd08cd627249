use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("reference measure must be strictly positive (state {state} has value {value})")]
    NonPositiveReference { state: usize, value: f64 },

    #[error("dimension mismatch: expected {expected}, found {found} ({what})")]
    DimensionMismatch {
        what: &'static str,
        expected: usize,
        found: usize,
    },

    #[error("invalid state space: {0}")]
    InvalidStateSpace(String),

    #[error("invalid measure: {0}")]
    InvalidMeasure(String),

    #[error("not a probability vector: {0}")]
    NotProbability(String),

    #[error("invalid rational literal {0:?}")]
    BadRational(String),

    #[error("circuit enumeration budget of {budget} subsets exceeded")]
    StateSpaceTooLarge { budget: u64 },

    #[error("vector is not in the normal space (max residual {residual:e})")]
    NotInNormalSpace { residual: f64 },

    #[error("vector vanishes at state {0}")]
    ZeroAtState(usize),

    #[error("state set is not a coparallel class")]
    NotACoparallelClass,

    #[error("empty state set")]
    EmptySet,

    #[error("projection did not converge after {iterations} iterations (residual {residual:e}, |theta| {theta_norm:e})")]
    NoConvergence {
        iterations: usize,
        residual: f64,
        theta_norm: f64,
    },

    #[error("distribution lies in the closure of the family")]
    PointInClosure,

    #[error("normal space is zero; the family closure is the whole simplex")]
    ZeroNormalSpace,

    #[error("oracle budget exceeded ({0} evaluations)")]
    BudgetExceeded(u64),

    #[error("target puts mass on a block smaller than the coarseness")]
    UnreachableTarget,

    #[error("invalid partition: {0}")]
    InvalidPartition(String),

    #[error("generator {generator:?} is not a subset of 1..={n}")]
    BadGenerator { generator: Vec<usize>, n: usize },

    #[error("vector is zero")]
    ZeroVector,

    #[error("vector entries do not sum to zero")]
    NotSumZero,

    #[error("u+ + u- is not strictly positive; the reference measure would be degenerate")]
    DegenerateSupport,

    #[error("family does not contain the uniform distribution (divergence {0:e})")]
    UniformNotInFamily(f64),

    #[error("family is not one-dimensional on three states (dim {dim}, N {size})")]
    NotOneDimensional { dim: usize, size: usize },

    #[error("partition shape violates the hypothesis: {0}")]
    ShapeMismatch(String),

    #[error("schema error at {field}: {message}")]
    Schema { field: String, message: String },
}
