use crate::linalg::CsrMatrix;
use crate::scalar::Real;

/// Greedy column coloring such that no two columns of one color share a
/// nonzero row. Returns the color of every column and the number of colors.
pub fn distance2_coloring<T: Real>(pattern: &CsrMatrix<T>) -> (Vec<usize>, usize) {
    let n = pattern.n_cols();
    let cols_rows = pattern.transpose();
    let mut color = vec![usize::MAX; n];
    let mut mark = vec![usize::MAX; n + 1];
    let mut n_colors = 0;
    for j in 0..n {
        let (rows, _) = cols_rows.row(j);
        for &r in rows {
            let (cols, _) = pattern.row(r);
            for &k in cols {
                if color[k] != usize::MAX {
                    mark[color[k]] = j;
                }
            }
        }
        let c = (0..).find(|&c| mark[c] != j).unwrap();
        color[j] = c;
        n_colors = n_colors.max(c + 1);
    }
    (color, n_colors)
}

/// Finite-difference Jacobian on a fixed sparsity pattern, one right-hand side
/// evaluation per color.
#[derive(Clone, Debug)]
pub struct ColoredJacobian<T> {
    pattern: CsrMatrix<T>,
    colors: Vec<usize>,
    n_colors: usize,
}

impl<T: Real> ColoredJacobian<T> {
    pub fn new(pattern: CsrMatrix<T>) -> Self {
        let (colors, n_colors) = distance2_coloring(&pattern);
        Self {
            pattern,
            colors,
            n_colors,
        }
    }

    pub fn n_colors(&self) -> usize {
        self.n_colors
    }

    pub fn colors(&self) -> &[usize] {
        &self.colors
    }

    /// Forward differences with steps `h_j = √ε (1 + |y_j|)`; `f0 = f(y)`.
    pub fn evaluate<E, F: FnMut(&[T], &mut [T]) -> Result<(), E>>(
        &self,
        mut f: F,
        y: &[T],
        f0: &[T],
    ) -> Result<CsrMatrix<T>, E> {
        let n = y.len();
        let sq = T::epsilon().sqrt();
        let h: Vec<T> = y.iter().map(|&v| sq * (T::one() + v.abs())).collect();
        let mut jac = self.pattern.clone();
        let mut yp = y.to_vec();
        let mut fp = vec![T::zero(); n];
        for c in 0..self.n_colors {
            for j in 0..n {
                if self.colors[j] == c {
                    yp[j] = y[j] + h[j];
                }
            }
            f(&yp, &mut fp)?;
            let row_ptr = self.pattern.row_ptr().to_vec();
            let col_idx = self.pattern.col_idx();
            let vals = jac.values_mut();
            for r in 0..n {
                for k in row_ptr[r]..row_ptr[r + 1] {
                    let j = col_idx[k];
                    if self.colors[j] == c {
                        vals[k] = (fp[r] - f0[r]) / (yp[j] - y[j]);
                    }
                }
            }
            for j in 0..n {
                if self.colors[j] == c {
                    yp[j] = y[j];
                }
            }
        }
        Ok(jac)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tridiagonal_needs_three_colors() {
        let a = CsrMatrix::tridiagonal(10, 1.0f64, 1.0, 1.0);
        let (c, k) = distance2_coloring(&a);
        assert_eq!(k, 3);
        assert_eq!(&c[..4], &[0, 1, 2, 0]);
    }

    #[test]
    fn recovers_linear_operator() {
        let a = CsrMatrix::tridiagonal(8, 1.0f64, -2.0, 3.0);
        let cj = ColoredJacobian::new(a.clone());
        let y = vec![0.5; 8];
        let f0 = a.spmv(&y).unwrap();
        let j = cj
            .evaluate::<(), _>(|x, out| {
                a.spmv_into(x, out).unwrap();
                Ok(())
            }, &y, &f0)
            .unwrap();
        for (u, v) in j.values().iter().zip(a.values()) {
            assert!((u - v).abs() < 1e-6);
        }
    }
}
