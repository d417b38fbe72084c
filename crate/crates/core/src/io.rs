//! JSON files for models and measures, CSV for traces. Indices are 0-based.

use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::filter::{DiscreteMeasure, FilterTrace};
use crate::model::{
    partition_from_lumping, partition_from_observation, FilterModel, NonnegMatrix, Partition, ProbVector, Provenance,
    TransitionMatrix,
};

pub type Triplet = (usize, usize, f64);

/// How the base matrix is split into labelled members.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PartitionSpec {
    /// Label of each state; `M(a)` keeps the columns of states labelled `a`.
    Lumping(Vec<String>),
    /// `R` as `(state, label index, probability)` triplets.
    Observation {
        labels: Vec<String>,
        #[serde(rename = "R")]
        r: Vec<Triplet>,
    },
    Explicit {
        labels: Vec<String>,
        members: Vec<Vec<Triplet>>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelFile {
    pub states: usize,
    #[serde(rename = "P")]
    pub p: Vec<Triplet>,
    pub partition: PartitionSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub stationary: Option<Vec<f64>>,
    #[serde(default)]
    pub meta: Provenance,
}

impl ModelFile {
    /// Explicit form of a partition; the stationary vector is kept when given.
    pub fn from_partition(m: &Partition, stationary: Option<&ProbVector>, meta: &Provenance) -> Self {
        ModelFile {
            states: m.num_states(),
            p: m.base().matrix().triplets(),
            partition: PartitionSpec::Explicit {
                labels: m.labels().to_vec(),
                members: m.members().iter().map(|mw| mw.triplets()).collect(),
            },
            stationary: stationary.map(|pi| pi.as_slice().to_vec()),
            meta: meta.clone(),
        }
    }

    pub fn from_model(model: &FilterModel) -> Self {
        Self::from_partition(model.partition(), Some(model.stationary()), model.meta())
    }

    pub fn to_partition(&self) -> Result<Partition> {
        let n = self.states;
        let base = TransitionMatrix::from_triplets(n, &self.p)?;
        match &self.partition {
            PartitionSpec::Lumping(g) => partition_from_lumping(&base, g),
            PartitionSpec::Observation { labels, r } => {
                let r = NonnegMatrix::from_triplets(n, labels.len(), r)?;
                partition_from_observation(&base, &r, labels)
            }
            PartitionSpec::Explicit { labels, members } => {
                let members = members
                    .iter()
                    .map(|t| NonnegMatrix::from_triplets(n, n, t))
                    .collect::<Result<Vec<_>>>()?;
                Partition::new(labels.clone(), members, base)
            }
        }
    }

    /// Uses the stored stationary vector after checking it, otherwise solves for one.
    pub fn to_model(&self) -> Result<FilterModel> {
        let partition = self.to_partition()?;
        match &self.stationary {
            Some(pi) => FilterModel::with_stationary(partition, exact_prob(pi)?, self.meta.clone()),
            None => FilterModel::new(partition, self.meta.clone()),
        }
    }
}

/// Validates like [`ProbVector::new`] but keeps the stored coordinates bit for bit.
pub fn exact_prob(v: &[f64]) -> Result<ProbVector> {
    ProbVector::new(v.to_vec())?;
    Ok(ProbVector::from_raw(v.to_vec()))
}

fn read_text(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| Error::Format(format!("cannot read {}: {e}", path.display())))
}

pub fn write_text(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).map_err(|e| Error::Format(format!("cannot write {}: {e}", path.display())))
}

pub fn to_json<T: Serialize>(value: &T) -> Result<String> {
    serde_json::to_string_pretty(value)
        .map(|mut s| {
            s.push('\n');
            s
        })
        .map_err(|e| Error::Format(e.to_string()))
}

pub fn from_json<T: for<'de> Deserialize<'de>>(text: &str) -> Result<T> {
    serde_json::from_str(text).map_err(|e| Error::Format(format!("malformed JSON: {e}")))
}

pub fn read_model(path: &Path) -> Result<ModelFile> {
    from_json(&read_text(path)?)
}

pub fn write_model(path: &Path, file: &ModelFile) -> Result<()> {
    write_text(path, &to_json(file)?)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AtomFile {
    pub w: f64,
    pub x: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeasureFile {
    pub atoms: Vec<AtomFile>,
    /// Mass dropped while producing the measure, if any.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pruned_mass: Option<f64>,
}

impl MeasureFile {
    pub fn from_measure(mu: &DiscreteMeasure, pruned_mass: Option<f64>) -> Self {
        MeasureFile {
            atoms: mu.atoms().iter().map(|(w, x)| AtomFile { w: *w, x: x.as_slice().to_vec() }).collect(),
            pruned_mass,
        }
    }

    pub fn to_measure(&self) -> Result<DiscreteMeasure> {
        let atoms = self
            .atoms
            .iter()
            .map(|a| Ok((a.w, exact_prob(&a.x)?)))
            .collect::<Result<Vec<_>>>()?;
        DiscreteMeasure::new(atoms)
    }
}

pub fn read_measure(path: &Path) -> Result<DiscreteMeasure> {
    from_json::<MeasureFile>(&read_text(path)?)?.to_measure()
}

/// Fixed scientific notation with 17 significant digits, which round-trips every `f64`.
pub fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

/// `step,label,x0,…,x{N−1}`; the first row is the start and has an empty label.
pub fn trace_csv(trace: &FilterTrace, labels: &[String]) -> String {
    let n = trace.steps.first().map_or(0, |s| s.state.len());
    let mut out = String::from("step,label");
    for i in 0..n {
        let _ = write!(out, ",x{i}");
    }
    out.push('\n');
    for (t, step) in trace.steps.iter().enumerate() {
        let label = step.label.map(|w| labels[w].as_str()).unwrap_or("");
        let _ = write!(out, "{t},{label}");
        for v in step.state.as_slice() {
            let _ = write!(out, ",{}", fmt_f64(*v));
        }
        out.push('\n');
    }
    out
}
