use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("invalid operator: {0}")]
    InvalidOperator(String),

    #[error("invalid spectral data: {0}")]
    InvalidSpectralData(String),

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    /// `1/Δ² - u` vanished while stepping the three-term recurrence.
    #[error("singular recurrence at node {node}: |1 - Δ²u| = {value:e}")]
    SingularRecurrence { node: usize, value: f64 },

    #[error("eigensolver did not converge for level {index} (residual {residual:e})")]
    EigenConvergence { index: usize, residual: f64 },

    #[error("levels {index} and {next} are numerically degenerate")]
    DegenerateSpectrum { index: usize, next: usize },

    #[error("inconsistent eigensystem: Δ³Σc² - 1 = {defect:e}")]
    InconsistentEigensystem { defect: f64 },

    /// The Gel'fand-Levitan row system for node `row` is singular or too ill-conditioned.
    #[error(
        "non-invertible data: GL system for row m = {row} has condition estimate {condition:e}"
    )]
    NonInvertible { row: usize, condition: f64 },

    #[error("degenerate data: Gram-Schmidt vector for node {node} has norm² {norm:e}")]
    DegenerateGram { node: usize, norm: f64 },

    #[error("synthesized operator is not tridiagonal: leakage {leakage:e} > {bound:e}")]
    NonTridiagonal { leakage: f64, bound: f64 },

    #[error("singular edge: |1 - Δ²u_edge| = {value:e}")]
    SingularEdge { value: f64 },

    #[error("recursion degenerate at row m = {row} (relative determinant {determinant:e})")]
    RecursionDegenerate { row: usize, determinant: f64 },

    #[error("invalid refinement study: {0}")]
    InvalidStudy(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// True for failures caused by malformed or inadmissible input rather than numerics.
    pub fn is_input_error(&self) -> bool {
        matches!(
            self,
            Error::InvalidGrid(_)
                | Error::InvalidOperator(_)
                | Error::InvalidSpectralData(_)
                | Error::DimensionMismatch(_)
                | Error::InvalidStudy(_)
                | Error::Config(_)
                | Error::Json(_)
        )
    }
}
