use std::path::PathBuf;

use thiserror::Error;

use crate::grid::GridFunction;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GridError {
    #[error("grid function needs at least one interior point")]
    Empty,
    #[error("boundary values must be exactly zero, got x(0) = {left}, x(T+1) = {right}")]
    Boundary { left: f64, right: f64 },
    #[error("non-finite value at grid point {index}")]
    NonFinite { index: usize },
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum NonlinearityError {
    #[error("{name}({site}) = {value} must be positive")]
    NonPositiveCoefficient {
        name: &'static str,
        site: usize,
        value: f64,
    },
    #[error("quadrature did not reach tolerance {tol:e}: achieved error estimate {estimate:e}")]
    Quadrature { tol: f64, estimate: f64 },
    #[error("structural constant `{0}` is not declared by the nonlinearity")]
    MissingConstant(&'static str),
    #[error("invalid structural constants: {0}")]
    InvalidConstants(String),
    #[error("invalid sampling configuration: {0}")]
    Sampling(String),
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SpecError {
    #[error("gamma must be positive, got {0}")]
    Gamma(f64),
    #[error("lambda must be positive, got {0}")]
    Lambda(f64),
    #[error("exponent p({index}) = {value} must exceed 1")]
    Exponent { index: usize, value: f64 },
    #[error("exponent profile has {got} entries, expected T + 2 = {expected}")]
    ExponentLength { got: usize, expected: usize },
    #[error("T must be at least 1")]
    EmptyGrid,
    #[error("{what} has length {got}, expected T = {expected}")]
    Length {
        what: &'static str,
        got: usize,
        expected: usize,
    },
    #[error("grid function has {got} interior points, problem has T = {expected}")]
    Dimension { got: usize, expected: usize },
    #[error("operation requires p- >= 2, got p- = {0}")]
    ExponentBelowTwo(f64),
}

#[derive(Debug, Clone, Error)]
pub enum ConstantsError {
    #[error(transparent)]
    Spec(#[from] SpecError),
    #[error(transparent)]
    Nonlinearity(#[from] NonlinearityError),
    #[error("hypothesis (A.4) on the g-term does not hold on samples: {0}")]
    Hypothesis(String),
    #[error("G is never negative (infimum {0}); gamma_max is undefined")]
    DegenerateG(f64),
    #[error("r_fraction must lie in (0, 1), got {0}")]
    RFraction(f64),
    #[error("cannot determine the tail slope of G: {0}")]
    TailSlope(String),
    #[error("{} counterexample(s) to the constant implications", .0.counterexamples())]
    Implication(Box<crate::constants::ImplicationReport>),
}

#[derive(Debug, Clone, Error)]
pub enum SolverError {
    #[error(transparent)]
    Spec(#[from] SpecError),
    #[error("descent did not certify a critical point: best residual {residual:e}")]
    NonConvergence {
        best: Box<GridFunction>,
        residual: f64,
    },
    #[error("brute-force oracle supports T <= 3, got T = {0}")]
    OracleDimension(usize),
    #[error("brute-force oracle needs at least 64 grid points per axis, got {0}")]
    OracleGrid(usize),
    #[error("invalid solver configuration: {0}")]
    Config(String),
}

#[derive(Debug, Error)]
pub enum ReportError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}:{line}:{column}: {message}")]
    Parse {
        path: PathBuf,
        line: usize,
        column: usize,
        message: String,
    },
    #[error("invalid field `{field}`: {message}")]
    Field { field: String, message: String },
    #[error(transparent)]
    Spec(#[from] SpecError),
    #[error(transparent)]
    Nonlinearity(#[from] NonlinearityError),
    #[error(transparent)]
    Solver(#[from] SolverError),
    #[error(transparent)]
    Constants(#[from] ConstantsError),
    #[error("invalid grid `{0}`: expected a:b:n with positive a, b and n >= 1")]
    Grid(String),
}
