//! Exact balanced transportation problem by the primal transportation simplex.
//!
//! The basis is a spanning tree of the bipartite supply/demand graph with
//! `m + n − 1` cells, degenerate cells carrying zero flow. Entering cells use
//! Dantzig's rule; after a run of degenerate pivots the solver switches to
//! Bland's rule, which cannot cycle.

use std::collections::VecDeque;

use crate::error::{Error, Result};

/// Reduced costs above `-REDUCED_COST_TOL * scale` count as optimal.
const REDUCED_COST_TOL: f64 = 1e-12;
const DEGENERATE_RUN_BEFORE_BLAND: usize = 50;

#[derive(Debug, Clone, PartialEq)]
pub struct TransportSolution {
    /// `(source, target, mass)` for every cell with positive flow.
    pub flows: Vec<(usize, usize, f64)>,
    pub cost: f64,
    pub iterations: usize,
}

struct Basis {
    cells: Vec<(usize, usize)>,
    flow: Vec<f64>,
}

fn northwest_corner(supply: &[f64], demand: &[f64]) -> Basis {
    let (m, n) = (supply.len(), demand.len());
    let mut s = supply.to_vec();
    let mut d = demand.to_vec();
    let mut cells = Vec::with_capacity(m + n - 1);
    let mut flow = Vec::with_capacity(m + n - 1);
    let (mut i, mut j) = (0, 0);
    loop {
        let x = s[i].min(d[j]).max(0.0);
        cells.push((i, j));
        flow.push(x);
        s[i] -= x;
        d[j] -= x;
        if i == m - 1 && j == n - 1 {
            break;
        }
        // exactly one index advances per cell, so the basis has m + n - 1 cells
        if j == n - 1 || (i < m - 1 && s[i] <= d[j]) {
            i += 1;
        } else {
            j += 1;
        }
    }
    Basis { cells, flow }
}

/// Potentials `u_i + v_j = c_ij` on basic cells, with `u_0 = 0`.
fn potentials(basis: &Basis, cost: &[Vec<f64>], m: usize, n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut adj: Vec<Vec<(usize, usize)>> = vec![Vec::new(); m + n];
    for (k, &(i, j)) in basis.cells.iter().enumerate() {
        adj[i].push((m + j, k));
        adj[m + j].push((i, k));
    }
    let mut pot = vec![f64::NAN; m + n];
    pot[0] = 0.0;
    let mut queue = VecDeque::from([0usize]);
    while let Some(node) = queue.pop_front() {
        for &(other, k) in &adj[node] {
            if pot[other].is_nan() {
                let (i, j) = basis.cells[k];
                pot[other] = cost[i][j] - pot[node];
                queue.push_back(other);
            }
        }
    }
    let u = pot[..m].to_vec();
    let v = pot[m..].to_vec();
    (u, v)
}

/// Basic cell indices on the tree path from row node `i` to column node `j`.
fn tree_path(basis: &Basis, m: usize, n: usize, i: usize, j: usize) -> Vec<usize> {
    let mut adj: Vec<Vec<(usize, usize)>> = vec![Vec::new(); m + n];
    for (k, &(r, c)) in basis.cells.iter().enumerate() {
        adj[r].push((m + c, k));
        adj[m + c].push((r, k));
    }
    let mut via: Vec<Option<(usize, usize)>> = vec![None; m + n];
    let mut seen = vec![false; m + n];
    seen[i] = true;
    let mut queue = VecDeque::from([i]);
    let target = m + j;
    while let Some(node) = queue.pop_front() {
        if node == target {
            break;
        }
        for &(other, k) in &adj[node] {
            if !seen[other] {
                seen[other] = true;
                via[other] = Some((node, k));
                queue.push_back(other);
            }
        }
    }
    let mut path = Vec::new();
    let mut node = target;
    while node != i {
        let (prev, k) = via[node].expect("basis is a spanning tree");
        path.push(k);
        node = prev;
    }
    path.reverse();
    path
}

/// Solves `min Σ c_ij x_ij` subject to row sums `supply` and column sums `demand`.
///
/// Totals must agree to `1e-9` relative; the last demand absorbs the residual.
pub fn solve_transport(supply: &[f64], demand: &[f64], cost: &[Vec<f64>]) -> Result<TransportSolution> {
    let (m, n) = (supply.len(), demand.len());
    if m == 0 || n == 0 {
        return Err(Error::Transport("empty supply or demand".into()));
    }
    if cost.len() != m || cost.iter().any(|r| r.len() != n) {
        return Err(Error::Transport("cost matrix shape does not match marginals".into()));
    }
    if supply.iter().chain(demand).any(|v| !(v.is_finite() && *v >= 0.0)) {
        return Err(Error::Transport("marginals must be finite and nonnegative".into()));
    }
    let (ts, td): (f64, f64) = (supply.iter().sum(), demand.iter().sum());
    if (ts - td).abs() > 1e-9 * ts.max(td).max(1.0) {
        return Err(Error::Transport(format!("unbalanced problem: supply {ts}, demand {td}")));
    }
    let mut demand = demand.to_vec();
    demand[n - 1] = (demand[n - 1] + ts - td).max(0.0);

    let scale = cost.iter().flatten().fold(0.0f64, |a, c| a.max(c.abs())).max(1.0);
    let mut basis = northwest_corner(supply, &demand);
    let max_iter = 50 * (m + n) * (m + n) + 1000;
    let mut degenerate_run = 0usize;
    let mut in_basis = vec![vec![false; n]; m];
    for &(i, j) in &basis.cells {
        in_basis[i][j] = true;
    }

    for iteration in 0..max_iter {
        let (u, v) = potentials(&basis, cost, m, n);
        let bland = degenerate_run >= DEGENERATE_RUN_BEFORE_BLAND;
        let mut entering: Option<(usize, usize, f64)> = None;
        'scan: for i in 0..m {
            for j in 0..n {
                if in_basis[i][j] {
                    continue;
                }
                let r = cost[i][j] - u[i] - v[j];
                if r < -REDUCED_COST_TOL * scale {
                    if bland {
                        entering = Some((i, j, r));
                        break 'scan;
                    }
                    if entering.is_none_or(|(_, _, best)| r < best) {
                        entering = Some((i, j, r));
                    }
                }
            }
        }
        let Some((ei, ej, _)) = entering else {
            let mut flows = basis
                .cells
                .iter()
                .zip(&basis.flow)
                .filter(|(_, f)| **f > 0.0)
                .map(|(&(i, j), &f)| (i, j, f))
                .collect::<Vec<_>>();
            flows.sort_by_key(|&(i, j, _)| (i, j));
            let cost = flows.iter().map(|&(i, j, f)| f * cost[i][j]).sum();
            return Ok(TransportSolution { flows, cost, iterations: iteration });
        };

        // cycle: entering (+), then alternate signs along the tree path from column ej back to row ei
        let path = tree_path(&basis, m, n, ei, ej);
        // path runs ei -> ... -> ej; the cell touching ej is adjacent to the entering cell
        let minus: Vec<usize> = path.iter().rev().step_by(2).copied().collect();
        let plus: Vec<usize> = path.iter().rev().skip(1).step_by(2).copied().collect();
        let theta = minus.iter().map(|&k| basis.flow[k]).fold(f64::INFINITY, f64::min);
        let leaving = if bland {
            *minus
                .iter()
                .filter(|&&k| basis.flow[k] == theta)
                .min_by_key(|&&k| basis.cells[k])
                .unwrap()
        } else {
            *minus.iter().find(|&&k| basis.flow[k] == theta).unwrap()
        };
        degenerate_run = if theta > 0.0 { 0 } else { degenerate_run + 1 };
        for &k in &minus {
            basis.flow[k] = (basis.flow[k] - theta).max(0.0);
        }
        for &k in &plus {
            basis.flow[k] += theta;
        }
        let (li, lj) = basis.cells[leaving];
        in_basis[li][lj] = false;
        in_basis[ei][ej] = true;
        basis.cells[leaving] = (ei, ej);
        basis.flow[leaving] = theta;
    }
    Err(Error::Transport(format!("no optimum after {max_iter} pivots")))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_cell() {
        let s = solve_transport(&[1.0], &[1.0], &[vec![0.7]]).unwrap();
        assert_eq!(s.flows, vec![(0, 0, 1.0)]);
        assert_eq!(s.cost, 0.7);
    }

    #[test]
    fn prefers_diagonal_when_cheaper() {
        let cost = vec![vec![0.0, 1.0], vec![1.0, 0.0]];
        let s = solve_transport(&[0.5, 0.5], &[0.5, 0.5], &cost).unwrap();
        assert_eq!(s.cost, 0.0);
        let cost = vec![vec![1.0, 0.0], vec![0.0, 1.0]];
        let s = solve_transport(&[0.5, 0.5], &[0.5, 0.5], &cost).unwrap();
        assert_eq!(s.cost, 0.0);
        assert_eq!(s.flows, vec![(0, 1, 0.5), (1, 0, 0.5)]);
    }

    #[test]
    fn textbook_instance() {
        // optimum 735 from an independent LP solve
        let cost = vec![vec![8.0, 6.0, 10.0], vec![9.0, 12.0, 13.0], vec![14.0, 9.0, 16.0]];
        let supply = [20.0, 30.0, 25.0];
        let demand = [10.0, 35.0, 30.0];
        let s = solve_transport(&supply, &demand, &cost).unwrap();
        let mut rows = [0.0; 3];
        let mut cols = [0.0; 3];
        for &(i, j, f) in &s.flows {
            rows[i] += f;
            cols[j] += f;
        }
        assert_eq!(rows, supply);
        assert_eq!(cols, demand);
        assert_eq!(s.cost, 735.0);
    }

    #[test]
    fn rejects_unbalanced() {
        assert!(solve_transport(&[1.0], &[0.5], &[vec![0.0]]).is_err());
    }
}
