use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::model::{FilterModel, NonnegMatrix, Partition, Provenance};

/// A partition of a matrix `A` on index set `I`, a block size `d` and a
/// `d`-permutation for every positive entry `(M(w))_{i,k}`.
///
/// A permutation `q` stands for the matrix with `Q_{j, q[j]} = 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct PermFamilySpec {
    pub partition: Partition,
    pub d: usize,
    pub perms: BTreeMap<(usize, usize, usize), Vec<usize>>,
}

impl PermFamilySpec {
    /// State index of the pair `(i, j)` in the product space.
    pub fn state(&self, i: usize, j: usize) -> usize {
        i * self.d + j
    }

    pub fn validate(&self) -> Result<()> {
        if self.d < 2 {
            return Err(Error::InvalidParams(format!("block size {} must be at least 2", self.d)));
        }
        for (w, m) in self.partition.members().iter().enumerate() {
            for i in 0..m.rows() {
                let cols: Vec<usize> = m.row(i).map(|(k, _)| k).collect();
                if cols.len() > 1 {
                    return Err(Error::InvalidParams(format!(
                        "member {:?} has {} nonzero columns in row {i}; at most one is allowed",
                        self.partition.labels()[w],
                        cols.len()
                    )));
                }
                for k in cols {
                    let q = self.perms.get(&(i, k, w)).ok_or_else(|| {
                        Error::InvalidParams(format!("missing permutation for (i={i}, k={k}, w={w})"))
                    })?;
                    if !is_permutation(q, self.d) {
                        return Err(Error::InvalidParams(format!(
                            "entry for (i={i}, k={k}, w={w}) is not a permutation of 0..{}",
                            self.d
                        )));
                    }
                }
            }
        }
        Ok(())
    }
}

pub fn is_permutation(q: &[usize], d: usize) -> bool {
    let mut seen = vec![false; d];
    q.len() == d && q.iter().all(|&m| m < d && !std::mem::replace(&mut seen[m], true))
}

/// Builds `M'(w)_{(i,j),(k,m)} = M(w)_{i,k} Q(i,k,w)_{j,m}` on `I × {1..d}`.
pub fn perm_family_partition(spec: &PermFamilySpec) -> Result<Partition> {
    spec.validate()?;
    let n = spec.partition.num_states() * spec.d;
    let members = spec
        .partition
        .members()
        .iter()
        .enumerate()
        .map(|(w, m)| {
            let mut t = Vec::with_capacity(m.nnz() * spec.d);
            for (i, k, v) in m.triplets() {
                let q = &spec.perms[&(i, k, w)];
                for (j, &qm) in q.iter().enumerate() {
                    t.push((spec.state(i, j), spec.state(k, qm), v));
                }
            }
            NonnegMatrix::from_triplets(n, n, &t)
        })
        .collect::<Result<Vec<_>>>()?;
    Partition::from_members(spec.partition.labels().to_vec(), members)
}

pub fn perm_family_model(spec: &PermFamilySpec) -> Result<FilterModel> {
    let partition = perm_family_partition(spec)?;
    let meta = Provenance::new("perm-family")
        .with_param("blocks", spec.partition.num_states())
        .with_param("d", spec.d);
    FilterModel::new(partition, meta)
}

/// Kesten's example in block form: `I = {1, 2}`, `d = 4`, `A` the all-halves
/// matrix lumped by column.
pub fn kesten_perm_spec() -> PermFamilySpec {
    let a = crate::model::TransitionMatrix::from_dense(&[vec![0.5, 0.5], vec![0.5, 0.5]]).expect("stochastic");
    let partition = crate::model::partition_from_lumping(&a, &["a", "b"]).expect("lumping");
    let perms = BTreeMap::from([
        ((0, 0, 0), vec![0, 1, 3, 2]),
        ((0, 1, 1), vec![0, 1, 3, 2]),
        ((1, 0, 0), vec![0, 1, 3, 2]),
        ((1, 1, 1), vec![3, 2, 0, 1]),
    ]);
    PermFamilySpec { partition, d: 4, perms }
}
