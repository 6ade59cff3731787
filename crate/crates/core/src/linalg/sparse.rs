use crate::linalg::LinalgError;
use crate::scalar::Real;

/// Square or rectangular matrix in compressed sparse row form.
///
/// Column indices inside every row are strictly increasing, which makes the
/// incomplete factorizations built on top of it deterministic.
#[derive(Clone, Debug, PartialEq)]
pub struct CsrMatrix<T> {
    n_rows: usize,
    n_cols: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    values: Vec<T>,
}

impl<T: Real> CsrMatrix<T> {
    /// Builds a matrix from raw CSR arrays, validating the structural invariants.
    pub fn from_raw(
        n_rows: usize,
        n_cols: usize,
        row_ptr: Vec<usize>,
        col_idx: Vec<usize>,
        values: Vec<T>,
    ) -> Result<Self, LinalgError> {
        if row_ptr.len() != n_rows + 1 || row_ptr[0] != 0 {
            return Err(LinalgError::Structure("row pointer length or origin".into()));
        }
        if col_idx.len() != values.len() || *row_ptr.last().unwrap() != col_idx.len() {
            return Err(LinalgError::Structure(
                "index and value arrays disagree".into(),
            ));
        }
        for r in 0..n_rows {
            let (lo, hi) = (row_ptr[r], row_ptr[r + 1]);
            if lo > hi {
                return Err(LinalgError::Structure(format!("row {r} has negative extent")));
            }
            let cols = &col_idx[lo..hi];
            if cols.iter().any(|&c| c >= n_cols) {
                return Err(LinalgError::Structure(format!("row {r} has column out of range")));
            }
            if cols.windows(2).any(|w| w[0] >= w[1]) {
                return Err(LinalgError::Structure(format!(
                    "row {r} columns not strictly increasing"
                )));
            }
        }
        Ok(Self {
            n_rows,
            n_cols,
            row_ptr,
            col_idx,
            values,
        })
    }

    /// Assembles from (row, col, value) triplets; duplicates are summed.
    pub fn from_triplets(
        n_rows: usize,
        n_cols: usize,
        triplets: &[(usize, usize, T)],
    ) -> Result<Self, LinalgError> {
        let mut rows: Vec<Vec<(usize, T)>> = vec![Vec::new(); n_rows];
        for &(r, c, v) in triplets {
            if r >= n_rows || c >= n_cols {
                return Err(LinalgError::Structure(format!(
                    "triplet ({r}, {c}) outside {n_rows}x{n_cols}"
                )));
            }
            rows[r].push((c, v));
        }
        let mut row_ptr = Vec::with_capacity(n_rows + 1);
        let mut col_idx = Vec::with_capacity(triplets.len());
        let mut values = Vec::with_capacity(triplets.len());
        row_ptr.push(0);
        for mut row in rows {
            row.sort_by_key(|&(c, _)| c);
            for (c, v) in row {
                if col_idx.len() > *row_ptr.last().unwrap() && *col_idx.last().unwrap() == c {
                    *values.last_mut().unwrap() += v;
                } else {
                    col_idx.push(c);
                    values.push(v);
                }
            }
            row_ptr.push(col_idx.len());
        }
        Ok(Self {
            n_rows,
            n_cols,
            row_ptr,
            col_idx,
            values,
        })
    }

    pub fn identity(n: usize) -> Self {
        Self::from_diagonal(&vec![T::one(); n])
    }

    pub fn zeros(n_rows: usize, n_cols: usize) -> Self {
        Self {
            n_rows,
            n_cols,
            row_ptr: vec![0; n_rows + 1],
            col_idx: Vec::new(),
            values: Vec::new(),
        }
    }

    pub fn from_diagonal(diag: &[T]) -> Self {
        let n = diag.len();
        Self {
            n_rows: n,
            n_cols: n,
            row_ptr: (0..=n).collect(),
            col_idx: (0..n).collect(),
            values: diag.to_vec(),
        }
    }

    /// Tridiagonal Toeplitz matrix `tridiag(lower, diag, upper)` of order `n`.
    pub fn tridiagonal(n: usize, lower: T, diag: T, upper: T) -> Self {
        let mut t = Vec::with_capacity(3 * n);
        for i in 0..n {
            if i > 0 {
                t.push((i, i - 1, lower));
            }
            t.push((i, i, diag));
            if i + 1 < n {
                t.push((i, i + 1, upper));
            }
        }
        Self::from_triplets(n, n, &t).expect("valid tridiagonal pattern")
    }

    /// Converts a dense row-major block, dropping exact zeros.
    pub fn from_dense_rows(rows: &[Vec<T>]) -> Self {
        let n_rows = rows.len();
        let n_cols = rows.first().map_or(0, Vec::len);
        let mut t = Vec::new();
        for (i, row) in rows.iter().enumerate() {
            for (j, &v) in row.iter().enumerate() {
                if v != T::zero() {
                    t.push((i, j, v));
                }
            }
        }
        Self::from_triplets(n_rows, n_cols, &t).expect("dense rows are rectangular")
    }

    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    pub fn n_cols(&self) -> usize {
        self.n_cols
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn is_square(&self) -> bool {
        self.n_rows == self.n_cols
    }

    pub fn row_ptr(&self) -> &[usize] {
        &self.row_ptr
    }

    pub fn col_idx(&self) -> &[usize] {
        &self.col_idx
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [T] {
        &mut self.values
    }

    /// Column indices and values of row `r`.
    pub fn row(&self, r: usize) -> (&[usize], &[T]) {
        let (lo, hi) = (self.row_ptr[r], self.row_ptr[r + 1]);
        (&self.col_idx[lo..hi], &self.values[lo..hi])
    }

    /// Entry `(r, c)`, zero when not stored.
    pub fn get(&self, r: usize, c: usize) -> T {
        let (cols, vals) = self.row(r);
        cols.binary_search(&c).map_or(T::zero(), |k| vals[k])
    }

    /// `y = A x`.
    pub fn spmv(&self, x: &[T]) -> Result<Vec<T>, LinalgError> {
        let mut y = vec![T::zero(); self.n_rows];
        self.spmv_into(x, &mut y)?;
        Ok(y)
    }

    pub fn spmv_into(&self, x: &[T], y: &mut [T]) -> Result<(), LinalgError> {
        if x.len() != self.n_cols || y.len() != self.n_rows {
            return Err(LinalgError::Dimension {
                expected: self.n_cols,
                found: x.len(),
            });
        }
        for (r, yr) in y.iter_mut().enumerate() {
            let (lo, hi) = (self.row_ptr[r], self.row_ptr[r + 1]);
            let mut acc = T::zero();
            for k in lo..hi {
                acc += self.values[k] * x[self.col_idx[k]];
            }
            *yr = acc;
        }
        Ok(())
    }

    /// Returns `alpha * I + beta * A`, inserting diagonal entries where the pattern lacks them.
    pub fn shifted(&self, alpha: T, beta: T) -> Result<Self, LinalgError> {
        if !self.is_square() {
            return Err(LinalgError::NotSquare(self.n_rows, self.n_cols));
        }
        let mut t = Vec::with_capacity(self.nnz() + self.n_rows);
        for r in 0..self.n_rows {
            let (cols, vals) = self.row(r);
            for (&c, &v) in cols.iter().zip(vals) {
                t.push((r, c, beta * v));
            }
            t.push((r, r, alpha));
        }
        Self::from_triplets(self.n_rows, self.n_cols, &t)
    }

    pub fn scaled(&self, s: T) -> Self {
        let mut out = self.clone();
        out.values.iter_mut().for_each(|v| *v *= s);
        out
    }

    pub fn to_dense_rows(&self) -> Vec<Vec<T>> {
        let mut d = vec![vec![T::zero(); self.n_cols]; self.n_rows];
        for (r, row) in d.iter_mut().enumerate() {
            let (cols, vals) = self.row(r);
            for (&c, &v) in cols.iter().zip(vals) {
                row[c] = v;
            }
        }
        d
    }

    pub fn transpose(&self) -> Self {
        let mut t = Vec::with_capacity(self.nnz());
        for r in 0..self.n_rows {
            let (cols, vals) = self.row(r);
            for (&c, &v) in cols.iter().zip(vals) {
                t.push((c, r, v));
            }
        }
        Self::from_triplets(self.n_cols, self.n_rows, &t).expect("transpose of valid matrix")
    }

    /// Real interval containing the real parts of all eigenvalues, from the
    /// union of the Gershgorin discs.
    pub fn gershgorin_interval(&self) -> Result<(T, T), LinalgError> {
        if !self.is_square() {
            return Err(LinalgError::NotSquare(self.n_rows, self.n_cols));
        }
        if self.n_rows == 0 {
            return Ok((T::zero(), T::zero()));
        }
        let mut lo = T::infinity();
        let mut hi = T::neg_infinity();
        for r in 0..self.n_rows {
            let (cols, vals) = self.row(r);
            let mut diag = T::zero();
            let mut radius = T::zero();
            for (&c, &v) in cols.iter().zip(vals) {
                if c == r {
                    diag = v;
                } else {
                    radius += v.abs();
                }
            }
            lo = lo.min(diag - radius);
            hi = hi.max(diag + radius);
        }
        Ok((lo, hi))
    }
}

/// Free-function form of [`CsrMatrix::spmv`].
pub fn spmv<T: Real>(a: &CsrMatrix<T>, x: &[T]) -> Result<Vec<T>, LinalgError> {
    a.spmv(x)
}

/// Free-function form of [`CsrMatrix::gershgorin_interval`].
pub fn gershgorin_interval<T: Real>(a: &CsrMatrix<T>) -> Result<(T, T), LinalgError> {
    a.gershgorin_interval()
}
