use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Tolerance on the coordinate sum accepted before renormalizing.
pub const SUM_TOLERANCE: f64 = 1e-9;

/// Finite truncation of the state space.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StateSpace {
    size: usize,
    labels: Option<Vec<String>>,
}

impl StateSpace {
    pub fn new(size: usize) -> Result<Self> {
        if size == 0 {
            return Err(Error::InvalidParams("state space must have at least one state".into()));
        }
        Ok(Self { size, labels: None })
    }

    pub fn with_labels(labels: Vec<String>) -> Result<Self> {
        let mut space = Self::new(labels.len())?;
        space.labels = Some(labels);
        Ok(space)
    }

    pub fn size(&self) -> usize {
        self.size
    }

    pub fn label(&self, i: usize) -> String {
        match &self.labels {
            Some(l) => l[i].clone(),
            None => (i + 1).to_string(),
        }
    }
}

/// A point of the probability simplex.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ProbVector(Vec<f64>);

impl ProbVector {
    /// Validates nonnegativity and the unit sum, then renormalizes to an exact sum.
    pub fn new(coords: Vec<f64>) -> Result<Self> {
        if coords.is_empty() {
            return Err(Error::InvalidProbVector("empty vector".into()));
        }
        if let Some((i, v)) = coords
            .iter()
            .enumerate()
            .find(|(_, v)| !v.is_finite() || **v < 0.0)
        {
            return Err(Error::InvalidProbVector(format!(
                "coordinate {i} is {v}"
            )));
        }
        let sum: f64 = coords.iter().sum();
        if (sum - 1.0).abs() > SUM_TOLERANCE {
            return Err(Error::InvalidProbVector(format!(
                "coordinates sum to {sum}"
            )));
        }
        Ok(Self::renormalized(coords, sum))
    }

    /// Normalizes an arbitrary nonnegative vector with positive mass.
    pub fn from_mass(coords: Vec<f64>) -> Result<Self> {
        let sum: f64 = coords.iter().sum();
        if sum.partial_cmp(&0.0) != Some(std::cmp::Ordering::Greater) || coords.iter().any(|v| !v.is_finite() || *v < 0.0) {
            return Err(Error::InvalidProbVector(format!(
                "cannot normalize vector with mass {sum}"
            )));
        }
        Ok(Self::renormalized(coords, sum))
    }

    fn renormalized(mut coords: Vec<f64>, sum: f64) -> Self {
        if sum != 1.0 {
            coords.iter_mut().for_each(|v| *v /= sum);
        }
        Self(coords)
    }

    /// Wraps coordinates already known to lie on the simplex.
    pub(crate) fn from_raw(coords: Vec<f64>) -> Self {
        Self(coords)
    }

    pub fn vertex(n: usize, i: usize) -> Self {
        let mut v = vec![0.0; n];
        v[i] = 1.0;
        Self(v)
    }

    pub fn uniform(n: usize) -> Self {
        Self(vec![1.0 / n as f64; n])
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }

    pub fn l1_distance(&self, other: &ProbVector) -> f64 {
        l1_distance(&self.0, &other.0)
    }

    /// Indices with strictly positive coordinate.
    pub fn support(&self) -> Vec<usize> {
        self.0
            .iter()
            .enumerate()
            .filter(|(_, v)| **v > 0.0)
            .map(|(i, _)| i)
            .collect()
    }
}

impl std::ops::Index<usize> for ProbVector {
    type Output = f64;
    fn index(&self, i: usize) -> &f64 {
        &self.0[i]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum NormKind {
    L1,
    Sup,
}

/// Nonnegative vector with the norm it is measured in.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NonnegVector {
    coords: Vec<f64>,
    norm_kind: NormKind,
}

impl NonnegVector {
    pub fn new(coords: Vec<f64>, norm_kind: NormKind) -> Result<Self> {
        if let Some((i, v)) = coords
            .iter()
            .enumerate()
            .find(|(_, v)| !v.is_finite() || **v < 0.0)
        {
            return Err(Error::InvalidParams(format!("coordinate {i} is {v}")));
        }
        Ok(Self { coords, norm_kind })
    }

    pub fn l1(coords: Vec<f64>) -> Result<Self> {
        Self::new(coords, NormKind::L1)
    }

    pub fn norm(&self) -> f64 {
        match self.norm_kind {
            NormKind::L1 => self.coords.iter().sum(),
            NormKind::Sup => self.coords.iter().cloned().fold(0.0, f64::max),
        }
    }

    pub fn norm_kind(&self) -> NormKind {
        self.norm_kind
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.coords
    }

    pub fn len(&self) -> usize {
        self.coords.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coords.is_empty()
    }
}

pub fn l1_norm(x: &[f64]) -> f64 {
    x.iter().map(|v| v.abs()).sum()
}

pub fn l1_distance(x: &[f64], y: &[f64]) -> f64 {
    debug_assert_eq!(x.len(), y.len());
    x.iter().zip(y).map(|(a, b)| (a - b).abs()).sum()
}
