//! Generators for concrete models: Kesten's eight-state chain, truncated
//! random walks, block-permutation families and Birkhoff decompositions.

pub mod birkhoff;
pub mod kesten;
pub mod perm_family;
pub mod random_walk;

pub use birkhoff::{birkhoff_decompose, birkhoff_partition, birkhoff_reconstruct};
pub use kesten::{kesten_matrix, kesten_model, kesten_start};
pub use perm_family::{kesten_perm_spec, perm_family_model, perm_family_partition, PermFamilySpec};
pub use random_walk::{case_b_limit, random_walk_model, RandomWalkParams};
