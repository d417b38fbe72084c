use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{FilterModel, NonnegMatrix, Partition, Provenance, TransitionMatrix};

/// Birth–death chain on `{0, …, N−1}`: `P(i,i) = b_i`, `P(i,i+1) = c_i`,
/// `P(i,i−1) = a_i`. The top state reflects, keeping `b_{N−1} + c_{N−1}`
/// on the diagonal.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RandomWalkParams {
    /// `a[0]` is unused and must be zero.
    pub a: Vec<f64>,
    pub b: Vec<f64>,
    pub c: Vec<f64>,
}

const PARAM_TOLERANCE: f64 = 1e-12;

impl RandomWalkParams {
    pub fn new(a: Vec<f64>, b: Vec<f64>, c: Vec<f64>) -> Result<Self> {
        let p = Self { a, b, c };
        p.validate()?;
        Ok(p)
    }

    /// Constant holding probability `b_i = 1/3`, `c_0 = 2/3`, `a_i = 1/2`, `c_i = 1/6`.
    pub fn case_a(n: usize) -> Self {
        let mut a = vec![0.5; n];
        let b = vec![1.0 / 3.0; n];
        let mut c = vec![1.0 / 6.0; n];
        a[0] = 0.0;
        c[0] = 2.0 / 3.0;
        Self { a, b, c }
    }

    /// Case A with state `i0` replaced by `(a, b, c) = (0.3, 0.6, 0.1)`, so that
    /// `b_{i0} = 0.6` strictly exceeds every other diagonal entry, including
    /// the reflected top state `1/3 + 1/6`.
    pub fn case_b(n: usize, i0: usize) -> Self {
        let mut p = Self::case_a(n);
        p.a[i0] = 0.3;
        p.b[i0] = 0.6;
        p.c[i0] = 0.1;
        p
    }

    pub fn len(&self) -> usize {
        self.b.len()
    }

    pub fn is_empty(&self) -> bool {
        self.b.is_empty()
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.b.len();
        if n < 2 || self.a.len() != n || self.c.len() != n {
            return Err(Error::InvalidParams(format!(
                "coefficient arrays must share a length of at least 2 (got {}, {}, {})",
                self.a.len(),
                n,
                self.c.len()
            )));
        }
        if self.a[0] != 0.0 {
            return Err(Error::InvalidParams("a[0] must be 0".into()));
        }
        for i in 0..n {
            let positive = self.b[i] > 0.0 && self.c[i] > 0.0 && (i == 0 || self.a[i] > 0.0);
            let sum = self.a[i] + self.b[i] + self.c[i];
            if !positive || (sum - 1.0).abs() > PARAM_TOLERANCE {
                return Err(Error::InvalidParams(format!(
                    "state {i}: a = {}, b = {}, c = {} must be positive and sum to 1",
                    self.a[i], self.b[i], self.c[i]
                )));
            }
        }
        Ok(())
    }

    /// Partial sums `Σ_{n=1}^{k} Π_{i=1}^{n} c_{i−1}/a_i` for `k = 1..N−1`.
    pub fn recurrence_partial_sums(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.len().saturating_sub(1));
        let (mut prod, mut sum) = (1.0, 0.0);
        for i in 1..self.len() {
            prod *= self.c[i - 1] / self.a[i];
            sum += prod;
            out.push(sum);
        }
        out
    }

    pub fn transition_matrix(&self) -> Result<TransitionMatrix> {
        self.validate()?;
        let n = self.len();
        let mut t = Vec::with_capacity(3 * n);
        for i in 0..n {
            if i > 0 {
                t.push((i, i - 1, self.a[i]));
            }
            if i + 1 < n {
                t.push((i, i, self.b[i]));
                t.push((i, i + 1, self.c[i]));
            } else {
                t.push((i, i, self.b[i] + self.c[i]));
            }
        }
        TransitionMatrix::from_triplets(n, &t)
    }
}

/// Two-member partition: label `1` keeps the odd columns, label `2` the even ones.
pub fn random_walk_model(p: &RandomWalkParams) -> Result<FilterModel> {
    let base = p.transition_matrix()?;
    let odd = base.matrix().filter_cols(|j| j % 2 == 1);
    let even = base.matrix().filter_cols(|j| j % 2 == 0);
    let partition = Partition::new(vec!["1".into(), "2".into()], vec![odd, even], base)?;
    let sums = p.recurrence_partial_sums();
    let meta = Provenance::new("random-walk")
        .with_truncation(p.len())
        .with_param("boundary", "reflect")
        .with_param("recurrence_partial_sum", sums.last().copied().unwrap_or(0.0));
    FilterModel::new(partition, meta)
}

/// The limit `u₀ᵀ e^{i0}` of normalized powers of `M(1)` when `b_{i0}` is the
/// unique largest diagonal entry and `i0` is odd: `u₀` is supported on
/// `i0−1, i0, i0+1` with entries `(c_{i0−1}, b_{i0}, a_{i0+1})` divided by their maximum.
pub fn case_b_limit(p: &RandomWalkParams, i0: usize) -> NonnegMatrix {
    let n = p.len();
    let mut u = vec![(i0 - 1, p.c[i0 - 1]), (i0, p.b[i0])];
    if i0 + 1 < n {
        u.push((i0 + 1, p.a[i0 + 1]));
    }
    let alpha = u.iter().map(|(_, v)| *v).fold(0.0, f64::max);
    let t: Vec<(usize, usize, f64)> = u.into_iter().map(|(i, v)| (i, i0, v / alpha)).collect();
    NonnegMatrix::from_triplets(n, n, &t).expect("indices in range")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn case_a_partial_sums_approach_two() {
        let p = RandomWalkParams::case_a(64);
        let s = p.recurrence_partial_sums();
        // c0/a1 = 4/3 followed by ratio 1/3: limit (4/3)/(1 − 1/3) = 2
        assert!((s[0] - 4.0 / 3.0).abs() < 1e-15);
        assert!((s.last().unwrap() - 2.0).abs() < 1e-12);
    }

    #[test]
    fn rows_sum_to_one_with_reflection() {
        for p in [RandomWalkParams::case_a(10), RandomWalkParams::case_b(10, 3)] {
            let t = p.transition_matrix().unwrap();
            assert!((t.get(9, 9) - (p.b[9] + p.c[9])).abs() < 1e-15);
            for s in t.matrix().row_sums() {
                assert!((s - 1.0).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn one_step_norms_of_alternating_word() {
        let p = RandomWalkParams::case_a(16);
        let m = random_walk_model(&p).unwrap();
        let g = m.partition().word_product(&[0, 1]).unwrap();
        let b0 = p.b[0];
        // the boundary row N−1 and its neighbours see the reflected diagonal
        for i in 0..=13 {
            let expect = if i % 2 == 0 { (1.0 - b0) * (1.0 - b0) } else { b0 * (1.0 - b0) };
            assert!((g.row_sum(i) - expect).abs() < 1e-15, "row {i}");
        }
    }

    #[test]
    fn rejects_bad_coefficients() {
        let mut p = RandomWalkParams::case_a(5);
        p.b[2] = 0.5;
        assert!(random_walk_model(&p).is_err());
        let mut p = RandomWalkParams::case_a(5);
        p.a[0] = 0.1;
        assert!(p.validate().is_err());
    }

    #[test]
    fn model_partition_splits_parity() {
        let m = random_walk_model(&RandomWalkParams::case_a(8)).unwrap();
        assert_eq!(m.partition().member(0).nonzero_cols(), vec![1, 3, 5, 7]);
        assert_eq!(m.partition().member(1).nonzero_cols(), vec![0, 2, 4, 6]);
        assert_eq!(m.meta().truncation, Some(8));
    }
}
