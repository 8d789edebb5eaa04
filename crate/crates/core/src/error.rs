use thiserror::Error;

/// Every failure the library can report. Variants map onto the CLI exit-code
/// contract through [`Error::is_solver_failure`].
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),
    #[error("g has more than one sign change on [0, |Ω|] (near {0:?})")]
    NonUniqueRoot(Vec<f64>),
    #[error("contract violation: {0}")]
    ContractViolation(String),
    #[error("quadrature did not converge: {0}")]
    Quadrature(String),
    #[error("no free boundary: {0}")]
    NoFreeBoundary(String),
    #[error("value out of range: {0}")]
    Range(String),
    #[error("A2 limit undetermined: {0}")]
    A2Undetermined(String),
    #[error("recursion diverged after {iterations} steps (last value {last})")]
    Divergence { iterations: usize, last: f64 },
    #[error("grid error: {0}")]
    Grid(String),
    #[error("degenerate field: {0}")]
    DegenerateField(String),
    #[error("field format error: {0}")]
    Format(String),
    #[error("io error: {0}")]
    Io(String),
    #[error("no dead core: {0}")]
    NoDeadCore(String),
    #[error("fixed point iteration failed: {0}")]
    FixedPoint(String),
    #[error("geometry error: {0}")]
    Geometry(String),
    #[error("monotone iteration lost monotonicity: {0}")]
    Monotonicity(String),
    #[error("linear solver failed: {0}")]
    LinearSolver(String),
    #[error("inner iteration diverged: {0}")]
    InnerDivergence(String),
    #[error("hypothesis check failed: {0}")]
    Hypothesis(String),
    #[error("insufficient data: {0}")]
    InsufficientData(String),
}

impl Error {
    /// True for failures of a numerical solve (as opposed to bad input).
    pub fn is_solver_failure(&self) -> bool {
        matches!(
            self,
            Error::Quadrature(_)
                | Error::FixedPoint(_)
                | Error::Monotonicity(_)
                | Error::LinearSolver(_)
                | Error::InnerDivergence(_)
                | Error::Divergence { .. }
        )
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
