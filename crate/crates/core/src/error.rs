use thiserror::Error;

/// Errors produced by the core library.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid graph: {0}")]
    InvalidGraph(String),

    #[error("graph is disconnected: node {unreachable} is not reachable from node 0")]
    Disconnected { unreachable: usize },

    #[error("({0}, {1}) is not an edge")]
    NotAnEdge(usize, usize),

    #[error("isoperimetric number needs subset enumeration over {n} nodes, above the cap of {cap}; use bound-check-only mode")]
    TooLargeForBruteForce { n: usize, cap: usize },

    #[error("invalid speed: {0}")]
    InvalidSpeed(String),

    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("eigensolver did not converge after {rotations} rotations (off-diagonal norm {residual:e})")]
    NoConvergence { rotations: usize, residual: f64 },

    #[error("matrix is not symmetric: |a[{row}][{col}] - a[{col}][{row}]| = {gap:e}")]
    NotSymmetric { row: usize, col: usize, gap: f64 },

    #[error("invalid state: {0}")]
    InvalidState(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("internal error: {0}")]
    Internal(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
