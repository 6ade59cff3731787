use crate::linalg::{CsrMatrix, LinalgError};
use crate::scalar::Real;

/// Incomplete LU factorization with zero fill-in.
///
/// `L` (unit lower) and `U` share the sparsity pattern of the input matrix,
/// augmented with the diagonal when the input does not store it.
#[derive(Clone, Debug)]
pub struct Ilu0<T> {
    lu: CsrMatrix<T>,
    diag_pos: Vec<usize>,
    /// Number of pivots that had to be replaced.
    pub pivot_fixes: usize,
}

impl<T: Real> Ilu0<T> {
    pub fn new(a: &CsrMatrix<T>) -> Result<Self, LinalgError> {
        if !a.is_square() {
            return Err(LinalgError::NotSquare(a.n_rows(), a.n_cols()));
        }
        let n = a.n_rows();
        let mut lu = a.shifted(T::zero(), T::one())?;
        let row_ptr = lu.row_ptr().to_vec();
        let col_idx = lu.col_idx().to_vec();
        let diag_pos: Vec<usize> = (0..n)
            .map(|r| {
                let lo = row_ptr[r];
                lo + col_idx[lo..row_ptr[r + 1]]
                    .binary_search(&r)
                    .expect("diagonal present after shift")
            })
            .collect();

        let row_norms: Vec<T> = (0..n)
            .map(|r| a.row(r).1.iter().fold(T::zero(), |m, v| m.max(v.abs())))
            .collect();

        let mut pivot_fixes = 0;
        // position of column c in the current row, usize::MAX when absent
        let mut marker = vec![usize::MAX; n];
        let vals = lu.values_mut();
        for i in 0..n {
            let (lo, hi) = (row_ptr[i], row_ptr[i + 1]);
            for k in lo..hi {
                marker[col_idx[k]] = k;
            }
            for kk in lo..hi {
                let k = col_idx[kk];
                if k >= i {
                    break;
                }
                let lik = vals[kk] / vals[diag_pos[k]];
                vals[kk] = lik;
                for jj in diag_pos[k] + 1..row_ptr[k + 1] {
                    let pos = marker[col_idx[jj]];
                    if pos != usize::MAX {
                        let ukj = vals[jj];
                        vals[pos] -= lik * ukj;
                    }
                }
            }
            let d = diag_pos[i];
            let floor = T::lit(1e-12) * row_norms[i].max(T::min_positive_value());
            if vals[d].abs() < floor {
                let sign = if vals[d] < T::zero() { -T::one() } else { T::one() };
                vals[d] = sign * floor;
                pivot_fixes += 1;
            }
            for k in lo..hi {
                marker[col_idx[k]] = usize::MAX;
            }
        }
        Ok(Self {
            lu,
            diag_pos,
            pivot_fixes,
        })
    }

    pub fn dim(&self) -> usize {
        self.lu.n_rows()
    }

    /// Solves `L U x = b` in place.
    pub fn apply(&self, x: &mut [T]) {
        let n = self.dim();
        let rp = self.lu.row_ptr();
        let ci = self.lu.col_idx();
        let v = self.lu.values();
        for i in 0..n {
            let mut acc = x[i];
            for k in rp[i]..self.diag_pos[i] {
                acc -= v[k] * x[ci[k]];
            }
            x[i] = acc;
        }
        for i in (0..n).rev() {
            let mut acc = x[i];
            for k in self.diag_pos[i] + 1..rp[i + 1] {
                acc -= v[k] * x[ci[k]];
            }
            x[i] = acc / v[self.diag_pos[i]];
        }
    }
}
