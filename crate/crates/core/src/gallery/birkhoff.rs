use crate::error::{Error, Result};
use crate::model::{NonnegMatrix, Partition, TransitionMatrix};

/// Convex decomposition of a doubly stochastic matrix into permutations,
/// by repeated perfect matchings on the positive support. `perm[i]` is the
/// column matched to row `i`.
pub fn birkhoff_decompose(d: &TransitionMatrix, tol: f64) -> Result<Vec<(f64, Vec<usize>)>> {
    let n = d.size();
    let ones = vec![1.0; n];
    let col_sums = d.left_mul(&ones);
    if let Some((j, s)) = col_sums.iter().enumerate().find(|(_, s)| (**s - 1.0).abs() > tol.max(1e-9)) {
        return Err(Error::NotDoublyStochastic(format!("column {j} sums to {s}")));
    }
    let mut rest = d.matrix().to_dense();
    let mut terms = Vec::new();
    let max_terms = (n - 1) * (n - 1) + 1;
    while rest.iter().flatten().any(|v| *v > tol) {
        if terms.len() == max_terms {
            return Err(Error::NotDoublyStochastic(format!("more than {max_terms} terms needed")));
        }
        let perm = perfect_matching(&rest, tol)
            .ok_or_else(|| Error::NotDoublyStochastic("positive support has no perfect matching".into()))?;
        let weight = perm.iter().enumerate().map(|(i, &j)| rest[i][j]).fold(f64::INFINITY, f64::min);
        for (i, &j) in perm.iter().enumerate() {
            rest[i][j] -= weight;
            if rest[i][j] <= tol {
                rest[i][j] = 0.0;
            }
        }
        terms.push((weight, perm));
    }
    Ok(terms)
}

/// Lexicographically smallest perfect matching on entries above `tol`:
/// rows in order take the smallest column that still leaves the remaining
/// rows perfectly matchable (checked by Kuhn's augmenting paths).
fn perfect_matching(m: &[Vec<f64>], tol: f64) -> Option<Vec<usize>> {
    let n = m.len();
    let mut perm = Vec::with_capacity(n);
    let mut used = vec![false; n];
    for i in 0..n {
        let j = (0..n).find(|&j| {
            if used[j] || m[i][j] <= tol {
                return false;
            }
            used[j] = true;
            let ok = completes(m, tol, i + 1, &used);
            used[j] = false;
            ok
        })?;
        used[j] = true;
        perm.push(j);
    }
    Some(perm)
}

/// Whether rows `first..n` can be matched into the unused columns.
fn completes(m: &[Vec<f64>], tol: f64, first: usize, used: &[bool]) -> bool {
    fn augment(i: usize, m: &[Vec<f64>], tol: f64, used: &[bool], seen: &mut [bool], owner: &mut [Option<usize>]) -> bool {
        for j in 0..m.len() {
            if !used[j] && m[i][j] > tol && !seen[j] {
                seen[j] = true;
                if owner[j].is_none_or(|k| augment(k, m, tol, used, seen, owner)) {
                    owner[j] = Some(i);
                    return true;
                }
            }
        }
        false
    }
    let n = m.len();
    let mut owner = vec![None; n];
    (first..n).all(|i| {
        let mut seen = vec![false; n];
        augment(i, m, tol, used, &mut seen, &mut owner)
    })
}

/// `Σ weight · permutation`.
pub fn birkhoff_reconstruct(terms: &[(f64, Vec<usize>)], n: usize) -> Vec<Vec<f64>> {
    let mut out = vec![vec![0.0; n]; n];
    for (w, perm) in terms {
        for (i, &j) in perm.iter().enumerate() {
            out[i][j] += w;
        }
    }
    out
}

/// The partition whose members are the weighted permutation matrices; labels `p1, p2, …`.
pub fn birkhoff_partition(terms: &[(f64, Vec<usize>)]) -> Result<Partition> {
    let n = terms
        .first()
        .map(|(_, p)| p.len())
        .ok_or(Error::EmptyLabels)?;
    let labels = (1..=terms.len()).map(|k| format!("p{k}")).collect();
    let members = terms
        .iter()
        .map(|(w, perm)| {
            let t: Vec<(usize, usize, f64)> = perm.iter().enumerate().map(|(i, &j)| (i, j, *w)).collect();
            NonnegMatrix::from_triplets(n, n, &t)
        })
        .collect::<Result<Vec<_>>>()?;
    Partition::from_members(labels, members)
}
