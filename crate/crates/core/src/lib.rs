//! Filtering processes of partitioned Markov chains, realized as Markov
//! chains on the probability simplex.

pub mod entropy;
pub mod error;
pub mod filter;
pub mod gallery;
pub mod io;
pub mod kantorovich;
pub mod model;
pub mod stability;

pub use error::{Error, Result};
