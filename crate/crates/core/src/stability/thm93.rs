use std::collections::VecDeque;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::{check_irreducible_aperiodic, NonnegMatrix, Partition};
use crate::stability::conditions::{condition_a_search, localizing_search, rank1_fit};

/// Squarings attempted before giving up on `G^{2^k}`.
pub const MAX_SQUARINGS: usize = 64;

/// The words of the construction and the limit of `Gⁿ/||Gⁿ||` for
/// `G = M(d) M(a) M(c) M(b)`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Thm93Witness {
    /// Subrectangular word.
    pub a: Vec<usize>,
    /// Localizing word.
    pub b: Vec<usize>,
    /// Connects a column of `M(a)` to a row of `M(b)`.
    pub c: Vec<usize>,
    /// Connects a column of `M(b)` back to a row of `M(a)`.
    pub d: Vec<usize>,
    /// `d a c b`.
    pub word: Vec<usize>,
    /// `k` with `G^{2^k}` within tolerance.
    pub squarings: usize,
    pub residual: f64,
    #[serde(rename = "W")]
    pub w: NonnegMatrix,
}

/// Labels along a shortest path `from → to` in the support graph of the base
/// matrix, each edge taking the lowest label that carries it.
pub fn support_path(m: &Partition, from: usize, to: usize) -> Option<Vec<usize>> {
    let n = m.num_states();
    let mut prev: Vec<Option<(usize, usize)>> = vec![None; n];
    let mut seen = vec![false; n];
    seen[from] = true;
    let mut queue = VecDeque::from([from]);
    while let Some(s) = queue.pop_front() {
        if s == to {
            let mut labels = Vec::new();
            let mut cur = to;
            while let Some((p, w)) = prev[cur] {
                labels.push(w);
                cur = p;
            }
            labels.reverse();
            return Some(labels);
        }
        for (t, _) in m.base().matrix().row(s) {
            if !seen[t] {
                seen[t] = true;
                let w = (0..m.num_labels()).find(|&w| m.member(w).get(s, t) > 0.0)?;
                prev[t] = Some((s, w));
                queue.push_back(t);
            }
        }
    }
    None
}

/// Builds the witness word of the construction on an ergodic base chain:
/// `a` subrectangular with rows `R` and columns `C`, `b` with at most
/// `col_bound` nonzero columns, `c` a path from `C[0]` to a row `i₀` of `M(b)`
/// and `d` a path from a column `j₀` of row `i₀` back to `R[0]`. Then
/// `G = M(d a c b)` has a positive diagonal entry at `j₀` and its normalized
/// powers tend to rank 1; repeated squaring is run until the row residual is
/// at most `tol`.
pub fn theorem93_witness(m: &Partition, max_len: usize, col_bound: usize, tol: f64, budget: usize) -> Result<Thm93Witness> {
    let report = check_irreducible_aperiodic(m.base());
    if !report.is_ergodic() {
        return Err(Error::NotErgodic { irreducible: report.irreducible, aperiodic: report.aperiodic });
    }
    let a = condition_a_search(m, max_len, budget)
        .word
        .ok_or_else(|| Error::PrerequisiteNotFound(format!("no subrectangular word up to length {max_len}")))?;
    let b = localizing_search(m, max_len, col_bound, budget)
        .word
        .ok_or_else(|| Error::PrerequisiteNotFound(format!("no word with at most {col_bound} columns up to length {max_len}")))?;
    let ma = m.word_product(&a)?;
    let mb = m.word_product(&b)?;
    let i1 = ma.nonzero_rows()[0];
    let j1 = ma.nonzero_cols()[0];
    let i0 = mb.nonzero_rows()[0];
    let j0 = mb.row(i0).next().map(|(j, _)| j).expect("nonzero row");
    let unreachable = || Error::PrerequisiteNotFound("support graph path missing".into());
    let c = support_path(m, j1, i0).ok_or_else(unreachable)?;
    let d = support_path(m, j0, i1).ok_or_else(unreachable)?;
    let word: Vec<usize> = [&d[..], &a, &c, &b].concat();

    let mut g = m.word_product(&word)?.normalized();
    let mut residual = f64::INFINITY;
    for squarings in 0..=MAX_SQUARINGS {
        let fit = rank1_fit(&g, tol)?;
        residual = fit.residual;
        if residual <= tol {
            return Ok(Thm93Witness { a, b, c, d, word, squarings, residual, w: fit.w });
        }
        g = g.mul(&g)?.normalized();
    }
    Err(Error::NoConvergence { iterations: MAX_SQUARINGS, residual })
}
