use std::collections::BTreeSet;

use crate::error::{Error, Result};
use crate::model::matrix::{check_row_stochastic, NonnegMatrix, TransitionMatrix};

/// Tolerance on `Σ_w M(w) = P`.
pub const PARTITION_TOLERANCE: f64 = 1e-9;

/// A finite family of nonnegative matrices `{M(w)}` summing to a transition matrix.
///
/// Labels are kept in a fixed order; that order is used for outcome
/// enumeration, sampling and word enumeration everywhere in the crate.
#[derive(Debug, Clone, PartialEq)]
pub struct Partition {
    labels: Vec<String>,
    members: Vec<NonnegMatrix>,
    base: TransitionMatrix,
}

impl Partition {
    pub fn new(labels: Vec<String>, members: Vec<NonnegMatrix>, base: TransitionMatrix) -> Result<Self> {
        if labels.is_empty() {
            return Err(Error::EmptyLabels);
        }
        if labels.len() != members.len() {
            return Err(Error::DimensionMismatch(format!(
                "{} labels for {} members",
                labels.len(),
                members.len()
            )));
        }
        let mut seen = BTreeSet::new();
        for l in &labels {
            if !seen.insert(l.as_str()) {
                return Err(Error::DuplicateLabel(l.clone()));
            }
        }
        let n = base.size();
        for (l, m) in labels.iter().zip(&members) {
            if m.dims() != (n, n) {
                return Err(Error::DimensionMismatch(format!(
                    "member {l:?} is {:?}, base is {n}x{n}",
                    m.dims()
                )));
            }
        }
        let mut sum = NonnegMatrix::zeros(n, n);
        for m in &members {
            sum = sum.add(m)?;
        }
        let deviation = sum.max_abs_diff(base.matrix());
        if deviation > PARTITION_TOLERANCE {
            return Err(Error::PartitionSum { deviation });
        }
        Ok(Self { labels, members, base })
    }

    /// Builds a partition whose base is the sum of the members.
    pub fn from_members(labels: Vec<String>, members: Vec<NonnegMatrix>) -> Result<Self> {
        let first = members.first().ok_or(Error::EmptyLabels)?;
        let mut sum = NonnegMatrix::zeros(first.rows(), first.cols());
        for m in &members {
            sum = sum.add(m)?;
        }
        let base = TransitionMatrix::new(sum)?;
        Self::new(labels, members, base)
    }

    /// The one-member partition `{P}`.
    pub fn trivial(p: &TransitionMatrix) -> Self {
        Self {
            labels: vec!["*".to_string()],
            members: vec![p.matrix().clone()],
            base: p.clone(),
        }
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn members(&self) -> &[NonnegMatrix] {
        &self.members
    }

    pub fn member(&self, w: usize) -> &NonnegMatrix {
        &self.members[w]
    }

    pub fn base(&self) -> &TransitionMatrix {
        &self.base
    }

    pub fn num_labels(&self) -> usize {
        self.labels.len()
    }

    pub fn num_states(&self) -> usize {
        self.base.size()
    }

    pub fn label_index(&self, label: &str) -> Result<usize> {
        self.labels
            .iter()
            .position(|l| l == label)
            .ok_or_else(|| Error::UnknownLabel(label.to_string()))
    }

    /// Resolves a word given by label names into label indices.
    pub fn word_indices<S: AsRef<str>>(&self, word: &[S]) -> Result<Vec<usize>> {
        word.iter().map(|w| self.label_index(w.as_ref())).collect()
    }

    pub fn word_labels(&self, word: &[usize]) -> Vec<String> {
        word.iter().map(|&w| self.labels[w].clone()).collect()
    }

    /// `M(w_1) M(w_2) ... M(w_m)` for a word of label indices; the empty word gives the identity.
    pub fn word_product(&self, word: &[usize]) -> Result<NonnegMatrix> {
        let mut acc = NonnegMatrix::identity(self.num_states());
        for &w in word {
            let m = self
                .members
                .get(w)
                .ok_or_else(|| Error::UnknownLabel(format!("#{w}")))?;
            acc = acc.mul(m)?;
        }
        Ok(acc)
    }
}

/// Column-split partition determined by a lumping function `g`:
/// `M(a)` keeps the columns `j` with `g(j) = a`. Labels are sorted.
pub fn partition_from_lumping<S: AsRef<str>>(p: &TransitionMatrix, g: &[S]) -> Result<Partition> {
    if g.len() != p.size() {
        return Err(Error::DimensionMismatch(format!(
            "lumping has {} entries for {} states",
            g.len(),
            p.size()
        )));
    }
    let labels: Vec<String> = g
        .iter()
        .map(|s| s.as_ref().to_string())
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();
    if labels.is_empty() {
        return Err(Error::EmptyLabels);
    }
    let members = labels
        .iter()
        .map(|a| p.matrix().filter_cols(|j| g[j].as_ref() == a))
        .collect();
    Partition::new(labels, members, p.clone())
}

/// Partition determined by an observation matrix `R` (states x labels):
/// `M(a)_{i,j} = P_{i,j} R_{j,a}`.
pub fn partition_from_observation<S: AsRef<str>>(
    p: &TransitionMatrix,
    r: &NonnegMatrix,
    labels: &[S],
) -> Result<Partition> {
    if r.rows() != p.size() || r.cols() != labels.len() {
        return Err(Error::DimensionMismatch(format!(
            "observation matrix is {:?}, expected {}x{}",
            r.dims(),
            p.size(),
            labels.len()
        )));
    }
    check_row_stochastic(r)?;
    let n = p.size();
    let mut per_label: Vec<Vec<(usize, usize, f64)>> = vec![Vec::new(); labels.len()];
    for (i, j, v) in p.matrix().triplets() {
        for (a, ra) in r.row(j) {
            per_label[a].push((i, j, v * ra));
        }
    }
    let members = per_label
        .iter()
        .map(|t| NonnegMatrix::from_triplets(n, n, t))
        .collect::<Result<Vec<_>>>()?;
    let labels = labels.iter().map(|s| s.as_ref().to_string()).collect();
    Partition::new(labels, members, p.clone())
}

/// Product partition: labels are pairs `(w1, w2)` in lexicographic order,
/// members `M1(w1) M2(w2)`, base `P1 P2`.
pub fn partition_product(m1: &Partition, m2: &Partition) -> Result<Partition> {
    if m1.num_states() != m2.num_states() {
        return Err(Error::DimensionMismatch(format!(
            "partitions on {} and {} states",
            m1.num_states(),
            m2.num_states()
        )));
    }
    let mut labels = Vec::with_capacity(m1.num_labels() * m2.num_labels());
    let mut members = Vec::with_capacity(labels.capacity());
    for (l1, a) in m1.labels.iter().zip(&m1.members) {
        for (l2, b) in m2.labels.iter().zip(&m2.members) {
            labels.push(product_label(l1, l2));
            members.push(a.mul(b)?);
        }
    }
    let base = m1.base.mul(&m2.base)?;
    let base = TransitionMatrix::new(base.into_matrix())?;
    Partition::new(labels, members, base)
}

/// `n`-fold product of a partition with itself; a partition of `P^n`.
pub fn partition_power(m: &Partition, n: usize) -> Result<Partition> {
    assert!(n >= 1, "partition power needs n >= 1");
    let mut acc = m.clone();
    for _ in 1..n {
        acc = partition_product(&acc, m)?;
    }
    Ok(acc)
}

fn product_label(a: &str, b: &str) -> String {
    format!("{a}.{b}")
}

/// `M(w_1)...M(w_m)` for a word of label names.
pub fn matrix_word_product<S: AsRef<str>>(m: &Partition, word: &[S]) -> Result<NonnegMatrix> {
    let idx = m.word_indices(word)?;
    m.word_product(&idx)
}
