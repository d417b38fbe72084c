use thiserror::Error;

/// Errors raised by model construction and the numerical routines.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid probability vector: {0}")]
    InvalidProbVector(String),

    #[error("negative or non-finite matrix entry {value} at ({row}, {col})")]
    InvalidEntry { row: usize, col: usize, value: f64 },

    #[error("duplicate matrix entry at ({row}, {col})")]
    DuplicateEntry { row: usize, col: usize },

    #[error("index ({row}, {col}) out of bounds for {rows}x{cols} matrix")]
    OutOfBounds {
        row: usize,
        col: usize,
        rows: usize,
        cols: usize,
    },

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("row {row} sums to {sum}, expected 1")]
    NotStochastic { row: usize, sum: f64 },

    #[error("partition members do not sum to the base matrix (max deviation {deviation:e})")]
    PartitionSum { deviation: f64 },

    #[error("empty label set")]
    EmptyLabels,

    #[error("duplicate label {0:?}")]
    DuplicateLabel(String),

    #[error("unknown label {0:?}")]
    UnknownLabel(String),

    #[error("transition matrix is not irreducible and aperiodic (irreducible: {irreducible}, aperiodic: {aperiodic})")]
    NotErgodic { irreducible: bool, aperiodic: bool },

    #[error("power iteration did not converge in {iterations} iterations (residual {residual:e})")]
    NoConvergence { iterations: usize, residual: f64 },

    #[error("invalid measure: {0}")]
    InvalidMeasure(String),

    #[error("norm mismatch: ||a|| = {a}, ||b|| = {b}")]
    NormMismatch { a: f64, b: f64 },

    #[error("matrix has no row above the floor {floor:e}")]
    AllRowsBelowFloor { floor: f64 },

    #[error("value {0} outside [0, 1]")]
    OutOfUnitInterval(f64),

    #[error("matrix is not doubly stochastic: {0}")]
    NotDoublyStochastic(String),

    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    #[error("prerequisite not found: {0}")]
    PrerequisiteNotFound(String),

    #[error("transport solver failed: {0}")]
    Transport(String),

    #[error("format error: {0}")]
    Format(String),
}

pub type Result<T> = std::result::Result<T, Error>;
