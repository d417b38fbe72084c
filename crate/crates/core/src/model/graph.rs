use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::matrix::{NonnegMatrix, TransitionMatrix};
use crate::model::vector::{l1_distance, ProbVector};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ErgodicityReport {
    pub irreducible: bool,
    pub aperiodic: bool,
}

impl ErgodicityReport {
    pub fn is_ergodic(&self) -> bool {
        self.irreducible && self.aperiodic
    }
}

/// BFS levels from `start` along the support digraph; `None` for unreachable states.
fn bfs_levels(m: &NonnegMatrix, start: usize, reverse: Option<&[Vec<usize>]>) -> Vec<Option<usize>> {
    let n = m.rows();
    let mut level = vec![None; n];
    level[start] = Some(0);
    let mut queue = VecDeque::from([start]);
    while let Some(i) = queue.pop_front() {
        let d = level[i].unwrap() + 1;
        let mut visit = |j: usize| {
            if level[j].is_none() {
                level[j] = Some(d);
                queue.push_back(j);
            }
        };
        match reverse {
            Some(adj) => adj[i].iter().for_each(|&j| visit(j)),
            None => m.row(i).for_each(|(j, _)| visit(j)),
        }
    }
    level
}

fn gcd(a: usize, b: usize) -> usize {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

/// Irreducibility by forward and backward reachability from state 0; the
/// period is the gcd of `level(i) + 1 - level(j)` over edges `i -> j`.
pub fn check_irreducible_aperiodic(p: &TransitionMatrix) -> ErgodicityReport {
    let m = p.matrix();
    let n = m.rows();
    let forward = bfs_levels(m, 0, None);
    let mut reverse_adj = vec![Vec::new(); n];
    for (i, j, _) in m.triplets() {
        reverse_adj[j].push(i);
    }
    let backward = bfs_levels(m, 0, Some(&reverse_adj));
    let irreducible = forward.iter().all(Option::is_some) && backward.iter().all(Option::is_some);
    if !irreducible {
        return ErgodicityReport { irreducible, aperiodic: false };
    }
    let mut period = 0usize;
    for (i, j, _) in m.triplets() {
        let (li, lj) = (forward[i].unwrap(), forward[j].unwrap());
        period = gcd(period, (li + 1).abs_diff(lj));
    }
    ErgodicityReport { irreducible, aperiodic: period == 1 }
}

/// Power iteration `x <- x P` from the uniform vector for an irreducible aperiodic `P`.
pub fn stationary_vector(p: &TransitionMatrix, tol: f64, max_iter: usize) -> Result<ProbVector> {
    let report = check_irreducible_aperiodic(p);
    if !report.is_ergodic() {
        return Err(Error::NotErgodic {
            irreducible: report.irreducible,
            aperiodic: report.aperiodic,
        });
    }
    power_iterate(p, tol, max_iter, false)
}

/// Stationary vector of the lazy chain `(I + P)/2`, which shares the
/// stationary vectors of `P` and converges for any irreducible `P`.
/// On reducible chains the result depends on the uniform start.
pub fn stationary_vector_lazy(p: &TransitionMatrix, tol: f64, max_iter: usize) -> Result<ProbVector> {
    power_iterate(p, tol, max_iter, true)
}

fn power_iterate(p: &TransitionMatrix, tol: f64, max_iter: usize, lazy: bool) -> Result<ProbVector> {
    let n = p.size();
    let mut x = vec![1.0 / n as f64; n];
    let mut residual = f64::INFINITY;
    for _ in 0..max_iter {
        let xp = p.left_mul(&x);
        residual = l1_distance(&xp, &x);
        if residual <= tol {
            return ProbVector::from_mass(xp);
        }
        x = if lazy {
            x.iter().zip(&xp).map(|(a, b)| 0.5 * (a + b)).collect()
        } else {
            xp
        };
        let s: f64 = x.iter().sum();
        x.iter_mut().for_each(|v| *v /= s);
    }
    Err(Error::NoConvergence { iterations: max_iter, residual })
}
