//! State vectors, sparse nonnegative matrices, partitions and their algebra.

pub mod filter_model;
pub mod graph;
pub mod matrix;
pub mod partition;
pub mod vector;

pub use filter_model::{FilterModel, Provenance};
pub use graph::{check_irreducible_aperiodic, stationary_vector, stationary_vector_lazy, ErgodicityReport};
pub use matrix::{check_row_stochastic, operator_norm, NonnegMatrix, TransitionMatrix};
pub use partition::{
    matrix_word_product, partition_from_lumping, partition_from_observation, partition_power,
    partition_product, Partition,
};
pub use vector::{l1_distance, l1_norm, NonnegVector, NormKind, ProbVector, StateSpace};
