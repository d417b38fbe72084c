use crate::error::{Error, Result};
use crate::model::{NonnegMatrix, Partition};
use crate::stability::words::{exhaustive_depth, power_search, shortlex_search, WordSearch};

/// Longest base word whose powers are tried after exhaustive enumeration.
pub const POWER_BASE_LEN: usize = 4;

/// The support is a product set `R × C` of its nonzero rows and columns:
/// equivalently, every nonzero row has exactly the nonzero columns `C`.
/// The zero matrix is vacuously subrectangular.
pub fn is_subrectangular(m: &NonnegMatrix) -> bool {
    let rows = m.nonzero_rows();
    let cols = m.nonzero_cols();
    m.nnz() == rows.len() * cols.len()
}

/// Largest l1 distance between normalized rows whose sums exceed `row_floor`.
pub fn rank1_proximity(m: &NonnegMatrix, row_floor: f64) -> Result<f64> {
    let n = m.cols();
    let rows: Vec<Vec<f64>> = (0..m.rows())
        .filter_map(|i| {
            let s = m.row_sum(i);
            (s > row_floor).then(|| {
                let mut r = vec![0.0; n];
                m.row(i).for_each(|(j, v)| r[j] = v / s);
                r
            })
        })
        .collect();
    if rows.is_empty() {
        return Err(Error::AllRowsBelowFloor { floor: row_floor });
    }
    let mut worst: f64 = 0.0;
    for a in 0..rows.len() {
        for b in a + 1..rows.len() {
            worst = worst.max(rows[a].iter().zip(&rows[b]).map(|(x, y)| (x - y).abs()).sum());
        }
    }
    Ok(worst)
}

/// A rank-1 candidate `W = uᵀv` for a normalized product `G/||G||`.
#[derive(Debug, Clone, PartialEq)]
pub struct Rank1Fit {
    /// `v` is the heaviest row of `G/||G||` scaled to sum 1 and `u_i` the row
    /// sums above the floor, so `||W|| = 1` and `W` has rank 1.
    pub w: NonnegMatrix,
    /// `max_i ||eⁱ G/||G|| − eⁱ W||₁`.
    pub residual: f64,
}

pub fn rank1_fit(g: &NonnegMatrix, row_floor: f64) -> Result<Rank1Fit> {
    let g = g.normalized();
    let sums = g.row_sums();
    let (top, top_sum) = sums
        .iter()
        .cloned()
        .enumerate()
        .fold((0, 0.0), |best, (i, s)| if s > best.1 { (i, s) } else { best });
    if top_sum <= row_floor {
        return Err(Error::AllRowsBelowFloor { floor: row_floor });
    }
    let v: Vec<(usize, f64)> = g.row(top).map(|(j, x)| (j, x / top_sum)).collect();
    let mut dense_v = vec![0.0; g.cols()];
    v.iter().for_each(|&(j, x)| dense_v[j] = x);
    let mut triplets = Vec::new();
    let mut residual: f64 = 0.0;
    for (i, &u) in sums.iter().enumerate() {
        if u <= row_floor {
            residual = residual.max(u);
            continue;
        }
        triplets.extend(v.iter().map(|&(j, x)| (i, j, u * x)));
        // ||row − u v||₁ = Σ_{j ∈ supp row} |row_j − u v_j| + u Σ_{j ∉ supp row} v_j
        let mut r = 0.0;
        let mut covered = 0.0;
        for (j, x) in g.row(i) {
            r += (x - u * dense_v[j]).abs();
            covered += dense_v[j];
        }
        r += u * (1.0 - covered).max(0.0);
        residual = residual.max(r);
    }
    Ok(Rank1Fit { w: NonnegMatrix::from_triplets(g.rows(), g.cols(), &triplets)?, residual })
}

fn search_two_phase<F>(m: &Partition, max_len: usize, budget: usize, pred: F) -> WordSearch
where
    F: Fn(&[usize], &NonnegMatrix) -> bool + Sync,
{
    let depth = exhaustive_depth(m.num_labels(), max_len);
    let first = shortlex_search(m, depth, budget, &pred);
    if first.word.is_some() || first.examined >= budget {
        return first;
    }
    let mut second = power_search(m, POWER_BASE_LEN.min(max_len), max_len, budget - first.examined, &pred);
    second.examined += first.examined;
    second.complete &= first.complete;
    second
}

/// A word whose product is nonzero and subrectangular. Words of length up to
/// [`exhaustive_depth`] are enumerated in shortlex order, then powers of short
/// words up to `max_len`. `None` is inconclusive.
pub fn condition_a_search(m: &Partition, max_len: usize, budget: usize) -> WordSearch {
    search_two_phase(m, max_len, budget, |_, g| is_subrectangular(g))
}

/// A word whose product has at most `col_bound` nonzero columns; same search order as Condition A.
pub fn localizing_search(m: &Partition, max_len: usize, col_bound: usize, budget: usize) -> WordSearch {
    search_two_phase(m, max_len, budget, |_, g| g.nonzero_cols().len() <= col_bound)
}

/// Default column bound for localization: a quarter of the states, rounded up.
pub fn default_col_bound(num_states: usize) -> usize {
    num_states.div_ceil(4)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gallery::{kesten_model, random_walk_model, RandomWalkParams};
    use crate::model::{partition_from_lumping, TransitionMatrix};
    use crate::stability::words::DEFAULT_BUDGET;
    use proptest::prelude::*;

    fn brute_subrectangular(d: &[Vec<f64>]) -> bool {
        let n = d.len();
        let m = d[0].len();
        for i1 in 0..n {
            for i2 in 0..n {
                for j1 in 0..m {
                    for j2 in 0..m {
                        if d[i1][j1] != 0.0 && d[i2][j2] != 0.0 && (d[i1][j2] == 0.0 || d[i2][j1] == 0.0) {
                            return false;
                        }
                    }
                }
            }
        }
        true
    }

    fn identity_lumped(dense: &[Vec<f64>]) -> Partition {
        let p = TransitionMatrix::from_dense(dense).unwrap();
        let g: Vec<String> = (0..dense.len()).map(|i| format!("s{i}")).collect();
        partition_from_lumping(&p, &g).unwrap()
    }

    #[test]
    fn subrectangular_examples() {
        let m = |d: &[Vec<f64>]| NonnegMatrix::from_dense(d).unwrap();
        assert!(is_subrectangular(&m(&[vec![1.0, 1.0], vec![0.0, 0.0]])));
        assert!(!is_subrectangular(&NonnegMatrix::identity(2)));
        assert!(is_subrectangular(&m(&[vec![0.2, 0.8], vec![0.5, 0.5]])));
        assert!(is_subrectangular(&m(&[vec![0.0, 1.0, 2.0], vec![0.0, 0.0, 0.0], vec![0.0, 3.0, 1.0]])));
        assert!(!is_subrectangular(&m(&[vec![0.0, 1.0, 2.0], vec![0.0, 0.0, 1.0]])));
    }

    proptest! {
        #[test]
        fn subrectangular_matches_quantifier_check(
            rows in 1usize..=8,
            cols in 1usize..=8,
            bits in proptest::collection::vec(0u8..4, 64),
        ) {
            let d: Vec<Vec<f64>> = (0..rows)
                .map(|i| (0..cols).map(|j| if bits[i * 8 + j] == 0 { 1.0 + j as f64 } else { 0.0 }).collect())
                .collect();
            let m = NonnegMatrix::from_dense(&d).unwrap();
            prop_assert_eq!(is_subrectangular(&m), brute_subrectangular(&d));
        }

        #[test]
        fn outer_products_are_subrectangular_and_rank_one(
            u in proptest::collection::vec(0.0f64..1.0, 1..7),
            v in proptest::collection::vec(0.0f64..1.0, 1..7),
        ) {
            let d: Vec<Vec<f64>> = u.iter().map(|a| v.iter().map(|b| a * b).collect()).collect();
            let m = NonnegMatrix::from_dense(&d).unwrap();
            prop_assert!(is_subrectangular(&m));
            if !m.is_zero() {
                prop_assert!(rank1_proximity(&m, 0.0).unwrap() < 1e-12);
                let fit = rank1_fit(&m, 0.0).unwrap();
                prop_assert!(fit.residual < 1e-12);
                prop_assert!((fit.w.operator_norm() - 1.0).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn proximity_examples() {
        assert_eq!(rank1_proximity(&NonnegMatrix::identity(2), 0.0).unwrap(), 2.0);
        assert!(matches!(
            rank1_proximity(&NonnegMatrix::zeros(2, 2), 0.0),
            Err(Error::AllRowsBelowFloor { .. })
        ));
        let p = TransitionMatrix::from_dense(&[vec![0.5, 0.5, 0.0], vec![0.0, 0.5, 0.5], vec![0.5, 0.0, 0.5]]).unwrap();
        let mut acc = p.matrix().clone();
        let mut last = f64::INFINITY;
        for _ in 0..30 {
            acc = acc.mul(p.matrix()).unwrap();
            let r = rank1_proximity(&acc, 0.0).unwrap();
            assert!(r <= last + 1e-15);
            last = r;
        }
        assert!(last < 1e-6);
    }

    #[test]
    fn fit_residual_bounded_by_proximity() {
        let m = NonnegMatrix::from_dense(&[vec![0.3, 0.1], vec![0.1, 0.3], vec![0.0, 0.0]]).unwrap();
        let fit = rank1_fit(&m, 0.0).unwrap();
        assert!(fit.residual <= rank1_proximity(&m, 0.0).unwrap() + 1e-15);
        assert_eq!(rank1_proximity(&fit.w, 0.0).unwrap(), 0.0);
        assert!((fit.residual - 1.0).abs() < 1e-15);
    }

    #[test]
    fn condition_a_examples() {
        let p = TransitionMatrix::from_dense(&[vec![0.3, 0.7], vec![0.6, 0.4]]).unwrap();
        let r = condition_a_search(&Partition::trivial(&p), 4, DEFAULT_BUDGET);
        assert_eq!(r.word, Some(vec![0]));
        let m = identity_lumped(&[vec![0.0, 1.0, 0.0], vec![0.0, 0.5, 0.5], vec![0.5, 0.0, 0.5]]);
        let r = condition_a_search(&m, 4, DEFAULT_BUDGET);
        assert_eq!(r.word, Some(vec![0]));
        let r = condition_a_search(kesten_model().partition(), 8, DEFAULT_BUDGET);
        assert_eq!(r.word, None);
        assert!(r.complete);
    }

    #[test]
    fn localizing_examples() {
        let m = identity_lumped(&[vec![0.9, 0.1], vec![0.2, 0.8]]);
        let r = localizing_search(&m, 3, 1, DEFAULT_BUDGET);
        assert_eq!(r.word, Some(vec![0]));
        let p = TransitionMatrix::from_dense(&[vec![0.0, 1.0, 0.0], vec![0.0, 0.5, 0.5], vec![0.5, 0.0, 0.5]]).unwrap();
        let r = localizing_search(&Partition::trivial(&p), 10, 2, DEFAULT_BUDGET);
        assert_eq!(r.word, None);
    }

    #[test]
    fn random_walk_localizes_to_half_the_states() {
        let n = 64;
        let m = random_walk_model(&RandomWalkParams::case_a(n)).unwrap();
        let bound = n / 2;
        let r = localizing_search(m.partition(), 8, bound, DEFAULT_BUDGET);
        let word = r.word.unwrap();
        let g = m.partition().word_product(&word).unwrap();
        assert!(!g.is_zero());
        assert!(g.nonzero_cols().len() <= bound);
        assert!(localizing_search(m.partition(), 8, default_col_bound(n), 10_000).word.is_none());
    }
}
