use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

/// Row-sum tolerance for stochastic matrices.
pub const ROW_SUM_TOLERANCE: f64 = 1e-9;

/// Sparse nonnegative matrix in compressed-row form.
///
/// Only strictly positive values are stored; entries within a row are kept
/// in ascending column order.
#[derive(Debug, Clone, PartialEq)]
pub struct NonnegMatrix {
    rows: usize,
    cols: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    vals: Vec<f64>,
}

impl NonnegMatrix {
    /// Builds a matrix from `(row, col, value)` triplets. Zero values are
    /// dropped, negative or non-finite values and repeated positions are errors.
    pub fn from_triplets(rows: usize, cols: usize, triplets: &[(usize, usize, f64)]) -> Result<Self> {
        let mut sorted: Vec<(usize, usize, f64)> = Vec::with_capacity(triplets.len());
        for &(row, col, value) in triplets {
            if row >= rows || col >= cols {
                return Err(Error::OutOfBounds { row, col, rows, cols });
            }
            if !value.is_finite() || value < 0.0 {
                return Err(Error::InvalidEntry { row, col, value });
            }
            sorted.push((row, col, value));
        }
        sorted.sort_by_key(|t| (t.0, t.1));
        for w in sorted.windows(2) {
            if (w[0].0, w[0].1) == (w[1].0, w[1].1) {
                return Err(Error::DuplicateEntry { row: w[0].0, col: w[0].1 });
            }
        }
        let mut row_ptr = vec![0usize; rows + 1];
        let mut col_idx = Vec::with_capacity(sorted.len());
        let mut vals = Vec::with_capacity(sorted.len());
        for (row, col, value) in sorted {
            if value > 0.0 {
                row_ptr[row + 1] += 1;
                col_idx.push(col);
                vals.push(value);
            }
        }
        for r in 0..rows {
            row_ptr[r + 1] += row_ptr[r];
        }
        Ok(Self { rows, cols, row_ptr, col_idx, vals })
    }

    pub fn from_dense(dense: &[Vec<f64>]) -> Result<Self> {
        let rows = dense.len();
        let cols = dense.first().map_or(0, |r| r.len());
        let mut triplets = Vec::new();
        for (i, row) in dense.iter().enumerate() {
            if row.len() != cols {
                return Err(Error::DimensionMismatch(format!(
                    "row {i} has {} entries, expected {cols}",
                    row.len()
                )));
            }
            for (j, &v) in row.iter().enumerate() {
                if v != 0.0 {
                    triplets.push((i, j, v));
                }
            }
        }
        Self::from_triplets(rows, cols, &triplets)
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            row_ptr: vec![0; rows + 1],
            col_idx: Vec::new(),
            vals: Vec::new(),
        }
    }

    pub fn identity(n: usize) -> Self {
        Self {
            rows: n,
            cols: n,
            row_ptr: (0..=n).collect(),
            col_idx: (0..n).collect(),
            vals: vec![1.0; n],
        }
    }

    /// Builds from rows of `(col, value)` pairs that are already sorted and positive.
    fn from_sorted_rows(rows: usize, cols: usize, data: Vec<Vec<(usize, f64)>>) -> Self {
        let mut row_ptr = Vec::with_capacity(rows + 1);
        row_ptr.push(0);
        let nnz = data.iter().map(|r| r.len()).sum();
        let mut col_idx = Vec::with_capacity(nnz);
        let mut vals = Vec::with_capacity(nnz);
        for row in data {
            for (c, v) in row {
                col_idx.push(c);
                vals.push(v);
            }
            row_ptr.push(col_idx.len());
        }
        Self { rows, cols, row_ptr, col_idx, vals }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn nnz(&self) -> usize {
        self.vals.len()
    }

    pub fn is_zero(&self) -> bool {
        self.vals.is_empty()
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    /// Nonzero entries of row `i` as `(col, value)` pairs.
    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let (a, b) = (self.row_ptr[i], self.row_ptr[i + 1]);
        self.col_idx[a..b].iter().copied().zip(self.vals[a..b].iter().copied())
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        let (a, b) = (self.row_ptr[i], self.row_ptr[i + 1]);
        match self.col_idx[a..b].binary_search(&j) {
            Ok(k) => self.vals[a + k],
            Err(_) => 0.0,
        }
    }

    /// All stored entries in (row, col) order.
    pub fn triplets(&self) -> Vec<(usize, usize, f64)> {
        (0..self.rows)
            .flat_map(|i| self.row(i).map(move |(j, v)| (i, j, v)))
            .collect()
    }

    pub fn to_dense(&self) -> Vec<Vec<f64>> {
        let mut d = vec![vec![0.0; self.cols]; self.rows];
        for (i, j, v) in self.triplets() {
            d[i][j] = v;
        }
        d
    }

    pub fn row_sum(&self, i: usize) -> f64 {
        self.row(i).map(|(_, v)| v).sum()
    }

    pub fn row_sums(&self) -> Vec<f64> {
        (0..self.rows).map(|i| self.row_sum(i)).collect()
    }

    /// Row vector times matrix, `x M`.
    pub fn left_mul(&self, x: &[f64]) -> Vec<f64> {
        debug_assert_eq!(x.len(), self.rows);
        let mut out = vec![0.0; self.cols];
        for (i, &xi) in x.iter().enumerate() {
            if xi == 0.0 {
                continue;
            }
            for (j, v) in self.row(i) {
                out[j] += xi * v;
            }
        }
        out
    }

    /// Matrix product `self * other`.
    pub fn mul(&self, other: &NonnegMatrix) -> Result<NonnegMatrix> {
        if self.cols != other.rows {
            return Err(Error::DimensionMismatch(format!(
                "cannot multiply {}x{} by {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        let mut acc = vec![0.0; other.cols];
        let mut touched: Vec<usize> = Vec::new();
        let mut data = Vec::with_capacity(self.rows);
        for i in 0..self.rows {
            for (k, a) in self.row(i) {
                for (j, b) in other.row(k) {
                    if acc[j] == 0.0 {
                        touched.push(j);
                    }
                    acc[j] += a * b;
                }
            }
            touched.sort_unstable();
            let mut row = Vec::with_capacity(touched.len());
            for &j in &touched {
                if acc[j] > 0.0 {
                    row.push((j, acc[j]));
                }
                acc[j] = 0.0;
            }
            touched.clear();
            data.push(row);
        }
        Ok(Self::from_sorted_rows(self.rows, other.cols, data))
    }

    pub fn add(&self, other: &NonnegMatrix) -> Result<NonnegMatrix> {
        if self.dims() != other.dims() {
            return Err(Error::DimensionMismatch(format!(
                "cannot add {:?} and {:?}",
                self.dims(),
                other.dims()
            )));
        }
        let mut data = Vec::with_capacity(self.rows);
        for i in 0..self.rows {
            let mut row: Vec<(usize, f64)> = Vec::new();
            let mut a = self.row(i).peekable();
            let mut b = other.row(i).peekable();
            loop {
                match (a.peek().copied(), b.peek().copied()) {
                    (Some((ja, va)), Some((jb, vb))) => {
                        if ja == jb {
                            row.push((ja, va + vb));
                            a.next();
                            b.next();
                        } else if ja < jb {
                            row.push((ja, va));
                            a.next();
                        } else {
                            row.push((jb, vb));
                            b.next();
                        }
                    }
                    (Some(e), None) => {
                        row.push(e);
                        a.next();
                    }
                    (None, Some(e)) => {
                        row.push(e);
                        b.next();
                    }
                    (None, None) => break,
                }
            }
            data.push(row);
        }
        Ok(Self::from_sorted_rows(self.rows, self.cols, data))
    }

    /// Multiplies every entry by a positive factor.
    pub fn scale(&self, factor: f64) -> NonnegMatrix {
        assert!(factor > 0.0 && factor.is_finite(), "scale factor must be positive");
        let mut out = self.clone();
        out.vals.iter_mut().for_each(|v| *v *= factor);
        out
    }

    /// Keeps only the columns for which `keep(col)` holds.
    pub fn filter_cols(&self, keep: impl Fn(usize) -> bool) -> NonnegMatrix {
        let data = (0..self.rows)
            .map(|i| self.row(i).filter(|(j, _)| keep(*j)).collect())
            .collect();
        Self::from_sorted_rows(self.rows, self.cols, data)
    }

    pub fn max_abs_diff(&self, other: &NonnegMatrix) -> f64 {
        assert_eq!(self.dims(), other.dims());
        let mut worst: f64 = 0.0;
        for i in 0..self.rows {
            for (j, v) in self.row(i) {
                worst = worst.max((v - other.get(i, j)).abs());
            }
            for (j, v) in other.row(i) {
                if self.get(i, j) == 0.0 {
                    worst = worst.max(v);
                }
            }
        }
        worst
    }

    /// Indices of rows with at least one positive entry.
    pub fn nonzero_rows(&self) -> Vec<usize> {
        (0..self.rows)
            .filter(|&i| self.row_ptr[i + 1] > self.row_ptr[i])
            .collect()
    }

    /// Indices of columns with at least one positive entry, ascending.
    pub fn nonzero_cols(&self) -> Vec<usize> {
        let mut seen = vec![false; self.cols];
        for &j in &self.col_idx {
            seen[j] = true;
        }
        (0..self.cols).filter(|&j| seen[j]).collect()
    }

    /// Largest stored value, zero for the zero matrix.
    pub fn max_entry(&self) -> f64 {
        self.vals.iter().cloned().fold(0.0, f64::max)
    }

    /// Operator norm for row-vector action under the l1 norm: the largest row sum.
    pub fn operator_norm(&self) -> f64 {
        (0..self.rows).map(|i| self.row_sum(i)).fold(0.0, f64::max)
    }

    /// Same support, entries divided by the operator norm. Zero stays zero.
    pub fn normalized(&self) -> NonnegMatrix {
        let n = self.operator_norm();
        if n > 0.0 {
            self.scale(1.0 / n)
        } else {
            self.clone()
        }
    }
}

#[derive(Serialize, Deserialize)]
struct MatrixRepr {
    rows: usize,
    cols: usize,
    entries: Vec<(usize, usize, f64)>,
}

impl Serialize for NonnegMatrix {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        MatrixRepr { rows: self.rows, cols: self.cols, entries: self.triplets() }.serialize(s)
    }
}

impl<'de> Deserialize<'de> for NonnegMatrix {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let r = MatrixRepr::deserialize(d)?;
        NonnegMatrix::from_triplets(r.rows, r.cols, &r.entries).map_err(serde::de::Error::custom)
    }
}

/// Operator norm `sup{||xM|| : ||x|| = 1}`; for nonnegative matrices this is
/// the largest row sum.
pub fn operator_norm(m: &NonnegMatrix) -> f64 {
    m.operator_norm()
}

/// Square row-stochastic matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct TransitionMatrix {
    inner: NonnegMatrix,
}

impl TransitionMatrix {
    pub fn new(inner: NonnegMatrix) -> Result<Self> {
        if !inner.is_square() {
            return Err(Error::DimensionMismatch(format!(
                "transition matrix must be square, got {:?}",
                inner.dims()
            )));
        }
        check_row_stochastic(&inner)?;
        Ok(Self { inner })
    }

    pub fn from_dense(dense: &[Vec<f64>]) -> Result<Self> {
        Self::new(NonnegMatrix::from_dense(dense)?)
    }

    pub fn from_triplets(n: usize, triplets: &[(usize, usize, f64)]) -> Result<Self> {
        Self::new(NonnegMatrix::from_triplets(n, n, triplets)?)
    }

    pub fn size(&self) -> usize {
        self.inner.rows()
    }

    pub fn matrix(&self) -> &NonnegMatrix {
        &self.inner
    }

    pub fn into_matrix(self) -> NonnegMatrix {
        self.inner
    }

    pub fn mul(&self, other: &TransitionMatrix) -> Result<TransitionMatrix> {
        Ok(Self { inner: self.inner.mul(&other.inner)? })
    }

    /// `x P` for a row vector.
    pub fn left_mul(&self, x: &[f64]) -> Vec<f64> {
        self.inner.left_mul(x)
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.inner.get(i, j)
    }
}

/// Checks that every row of a (possibly rectangular) matrix sums to one.
pub fn check_row_stochastic(m: &NonnegMatrix) -> Result<()> {
    for i in 0..m.rows() {
        let sum = m.row_sum(i);
        if (sum - 1.0).abs() > ROW_SUM_TOLERANCE {
            return Err(Error::NotStochastic { row: i, sum });
        }
    }
    Ok(())
}
