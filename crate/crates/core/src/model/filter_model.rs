use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::graph::stationary_vector_lazy;
use crate::model::partition::Partition;
use crate::model::vector::{l1_distance, ProbVector};

/// Tolerance on `||πP − π||₁` for the cached stationary vector.
pub const STATIONARY_TOLERANCE: f64 = 1e-8;

const STATIONARY_SOLVE_TOL: f64 = 1e-13;
const STATIONARY_MAX_ITER: usize = 1_000_000;

/// Where a model came from and how its state space was truncated.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub source: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub truncation: Option<usize>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub params: BTreeMap<String, String>,
}

impl Provenance {
    pub fn new(source: impl Into<String>) -> Self {
        Self { source: source.into(), ..Self::default() }
    }

    pub fn with_truncation(mut self, n: usize) -> Self {
        self.truncation = Some(n);
        self
    }

    pub fn with_param(mut self, key: impl Into<String>, value: impl ToString) -> Self {
        self.params.insert(key.into(), value.to_string());
        self
    }
}

/// A partition together with a stationary vector of its base matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct FilterModel {
    partition: Partition,
    stationary: ProbVector,
    meta: Provenance,
}

impl FilterModel {
    /// Computes π by lazy power iteration.
    pub fn new(partition: Partition, meta: Provenance) -> Result<Self> {
        let pi = stationary_vector_lazy(partition.base(), STATIONARY_SOLVE_TOL, STATIONARY_MAX_ITER)?;
        Self::with_stationary(partition, pi, meta)
    }

    pub fn with_stationary(partition: Partition, stationary: ProbVector, meta: Provenance) -> Result<Self> {
        if stationary.len() != partition.num_states() {
            return Err(Error::DimensionMismatch(format!(
                "stationary vector has {} coordinates for {} states",
                stationary.len(),
                partition.num_states()
            )));
        }
        let residual = l1_distance(&partition.base().left_mul(stationary.as_slice()), stationary.as_slice());
        if residual > STATIONARY_TOLERANCE {
            return Err(Error::NoConvergence { iterations: 0, residual });
        }
        Ok(Self { partition, stationary, meta })
    }

    pub fn partition(&self) -> &Partition {
        &self.partition
    }

    pub fn stationary(&self) -> &ProbVector {
        &self.stationary
    }

    pub fn meta(&self) -> &Provenance {
        &self.meta
    }

    pub fn num_states(&self) -> usize {
        self.partition.num_states()
    }

    pub fn into_partition(self) -> Partition {
        self.partition
    }
}
