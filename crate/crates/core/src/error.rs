use thiserror::Error;

/// Errors raised by tree construction, capacity and Ising computations.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("line {line}: vertex `{label}` declared as a child twice")]
    DuplicateChild { line: usize, label: String },

    #[error("line {line}: edge `{parent}` -> `{child}` closes a cycle")]
    Cycle {
        line: usize,
        parent: String,
        child: String,
    },

    #[error("missing `root` declaration")]
    MissingRoot,

    #[error("line {line}: edge parameter must be positive, got {value}")]
    NonPositiveCoupling { line: usize, value: f64 },

    #[error("line {line}: vertex `{label}` is not reachable from the root")]
    Unreachable { line: usize, label: String },

    #[error("root has no children")]
    DegenerateRoot,

    #[error("unknown vertex `{0}`")]
    UnknownVertex(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("vertex budget of {budget} exceeded ({requested} requested)")]
    VertexBudget { budget: u64, requested: u128 },

    #[error("vertex {0} is not a leaf, so the path is not maximal")]
    NotALeaf(usize),

    #[error("tree is not spherically symmetric at depth {0}")]
    NotSpherical(usize),

    #[error("invalid flow: {0}")]
    InvalidFlow(String),

    #[error("oracle failed to converge: {0}")]
    OracleBudget(String),

    #[error("enumeration budget exceeded: {free} free vertices (limit {limit})")]
    EnumerationBudget { free: usize, limit: usize },

    #[error("atom budget exceeded at vertex {vertex}: {atoms} atoms (limit {limit})")]
    AtomBudget {
        vertex: usize,
        atoms: usize,
        limit: usize,
    },

    #[error("boundary configuration incomplete: expected {0} leaf spins, each +1 or -1")]
    IncompleteBoundary(usize),

    #[error("numeric verification failed: {0}")]
    Verification(String),

    #[error("internal error: {0}")]
    Internal(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    /// True for failures of a numeric check rather than bad input.
    pub fn is_verification(&self) -> bool {
        matches!(
            self,
            Error::Verification(_) | Error::Internal(_) | Error::OracleBudget(_)
        )
    }
}
