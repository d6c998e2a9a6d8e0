use thiserror::Error;

/// Errors raised by mesh construction, discretization and solution.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid mesh: {0}")]
    InvalidMesh(String),

    #[error("cell {cell} is degenerate (area {area:e})")]
    DegenerateCell { cell: usize, area: f64 },

    #[error("edge {edge} does not belong to cell {cell}")]
    EdgeNotOnCell { cell: usize, edge: usize },

    #[error("unknown mesh family `{0}` (expected triangle, cross-split, zigzag or l-pair)")]
    UnknownFamily(String),

    #[error("mass matrix of degree {degree} on cell {cell} is not positive definite")]
    SingularMass { cell: usize, degree: usize },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("degree mismatch: {0}")]
    DegreeMismatch(String),

    #[error("saddle-point system is singular (zero pivot at unknown {pivot})")]
    Singular { pivot: usize },

    #[error("parse error on line {line}: {message}")]
    Parse { line: usize, message: String },
}

pub type Result<T> = std::result::Result<T, Error>;
