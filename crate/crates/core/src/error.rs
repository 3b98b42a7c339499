use thiserror::Error;

/// Errors produced by the library.
///
/// Variants fall into two groups: bad input (shape, domain, parse, invariant
/// violations) and numerical failures (non-convergence, unexpected rank).
/// [`Error::is_numerical`] separates the two.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("matrix is not square ({rows}x{cols})")]
    NotSquare { rows: usize, cols: usize },

    #[error("matrix is not symmetric (max asymmetry {asymmetry:.3e} exceeds {tol:.3e})")]
    NotSymmetric { asymmetry: f64, tol: f64 },

    #[error("Jacobi iteration did not converge within {sweeps} sweeps")]
    NoConvergence { sweeps: usize },

    #[error("matrix has full numerical rank, kernel is empty")]
    EmptyKernel,

    #[error("matrix is not positive definite (eigenvalue {eigenvalue:.3e} <= {tol:.3e})")]
    NotPositiveDefinite { eigenvalue: f64, tol: f64 },

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("vector {index} has norm {norm}, outside the accepted band around 1")]
    NonUnitVector { index: usize, norm: f64 },

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("no catalog ETF for d={d}, N={n}")]
    UnknownEtf { d: usize, n: usize },

    #[error("argument outside domain: {0}")]
    Domain(String),

    #[error("potential is not differentiable at pair ({i}, {j}); use a positive smoothing width")]
    NonSmoothPoint { i: usize, j: usize },

    #[error("c = {c} must exceed 1/N = {}", 1.0 / *.n as f64)]
    InfeasibleC { c: f64, n: usize },

    #[error("oracle supports N <= 8, got N = {n}")]
    TooLarge { n: usize },

    #[error("bound not applicable: {0}")]
    NotApplicable(String),

    #[error("exponent p = {p} outside the admissible range {range}")]
    BadExponent { p: f64, range: &'static str },

    #[error("Gale dual does not match the matrix (kernel residual {residual:.3e})")]
    MismatchedDual { residual: f64 },

    #[error("numerical rank {found} differs from expected rank {expected}")]
    RankMismatch { expected: usize, found: usize },

    #[error("N = d: the Gale dual is empty")]
    Degenerate,

    #[error("polynomial degree {degree} exceeds the supported maximum 6")]
    UnsupportedDegree { degree: usize },

    #[error("a non-constant expansion coefficient is negative")]
    NotCertifiable,

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("i/o error: {0}")]
    Io(String),
}

impl Error {
    /// True for failures of a numerical procedure rather than of its input.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::NoConvergence { .. } | Error::RankMismatch { .. } | Error::MismatchedDual { .. }
        )
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
