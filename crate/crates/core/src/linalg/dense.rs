use std::ops::{Index, IndexMut};

use crate::linalg::LinalgError;
use crate::scalar::Real;

/// Small square matrix stored row-major.
#[derive(Clone, Debug, PartialEq)]
pub struct DenseMatrix<T> {
    n: usize,
    data: Vec<T>,
}

impl<T: Real> DenseMatrix<T> {
    pub fn zeros(n: usize) -> Self {
        Self {
            n,
            data: vec![T::zero(); n * n],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n);
        for i in 0..n {
            m[(i, i)] = T::one();
        }
        m
    }

    pub fn from_diagonal(d: &[T]) -> Self {
        let mut m = Self::zeros(d.len());
        for (i, &v) in d.iter().enumerate() {
            m[(i, i)] = v;
        }
        m
    }

    pub fn from_rows(rows: &[Vec<T>]) -> Result<Self, LinalgError> {
        let n = rows.len();
        if rows.iter().any(|r| r.len() != n) {
            return Err(LinalgError::NotSquare(n, rows.first().map_or(0, Vec::len)));
        }
        Ok(Self {
            n,
            data: rows.iter().flatten().copied().collect(),
        })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn as_slice(&self) -> &[T] {
        &self.data
    }

    pub fn row(&self, i: usize) -> &[T] {
        &self.data[i * self.n..(i + 1) * self.n]
    }

    pub fn column(&self, j: usize) -> Vec<T> {
        (0..self.n).map(|i| self[(i, j)]).collect()
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    /// Maximum absolute column sum.
    pub fn norm1(&self) -> T {
        (0..self.n)
            .map(|j| (0..self.n).map(|i| self[(i, j)].abs()).sum::<T>())
            .fold(T::zero(), T::max)
    }

    pub fn matmul(&self, other: &Self) -> Self {
        let n = self.n;
        let mut out = Self::zeros(n);
        for i in 0..n {
            for k in 0..n {
                let a = self[(i, k)];
                if a == T::zero() {
                    continue;
                }
                let src = other.row(k);
                let dst = &mut out.data[i * n..(i + 1) * n];
                for (d, &s) in dst.iter_mut().zip(src) {
                    *d += a * s;
                }
            }
        }
        out
    }

    pub fn mul_vec(&self, x: &[T]) -> Vec<T> {
        (0..self.n)
            .map(|i| self.row(i).iter().zip(x).map(|(&a, &b)| a * b).sum())
            .collect()
    }

    pub fn scaled(&self, s: T) -> Self {
        Self {
            n: self.n,
            data: self.data.iter().map(|&v| v * s).collect(),
        }
    }

    /// `self += s * other`
    pub fn add_scaled(&mut self, s: T, other: &Self) {
        for (a, &b) in self.data.iter_mut().zip(&other.data) {
            *a += s * b;
        }
    }

    pub fn add_identity(&mut self, s: T) {
        for i in 0..self.n {
            self[(i, i)] += s;
        }
    }

    /// Solves `self · X = rhs` by LU with partial pivoting.
    pub fn solve_matrix(&self, rhs: &Self) -> Result<Self, LinalgError> {
        let n = self.n;
        let mut a = self.data.clone();
        let mut x = rhs.data.clone();
        for col in 0..n {
            let piv = (col..n)
                .max_by(|&i, &j| {
                    a[i * n + col]
                        .abs()
                        .partial_cmp(&a[j * n + col].abs())
                        .unwrap_or(std::cmp::Ordering::Equal)
                })
                .unwrap();
            if a[piv * n + col] == T::zero() {
                return Err(LinalgError::Singular);
            }
            if piv != col {
                for k in 0..n {
                    a.swap(col * n + k, piv * n + k);
                    x.swap(col * n + k, piv * n + k);
                }
            }
            let d = a[col * n + col];
            for i in col + 1..n {
                let f = a[i * n + col] / d;
                if f == T::zero() {
                    continue;
                }
                for k in col..n {
                    let v = a[col * n + k];
                    a[i * n + k] -= f * v;
                }
                for k in 0..n {
                    let v = x[col * n + k];
                    x[i * n + k] -= f * v;
                }
            }
        }
        for col in (0..n).rev() {
            let d = a[col * n + col];
            for k in 0..n {
                let mut acc = x[col * n + k];
                for j in col + 1..n {
                    acc -= a[col * n + j] * x[j * n + k];
                }
                x[col * n + k] = acc / d;
            }
        }
        Ok(Self { n, data: x })
    }

    pub fn solve_vec(&self, b: &[T]) -> Result<Vec<T>, LinalgError> {
        let n = self.n;
        let mut rhs = Self::zeros(n);
        for i in 0..n {
            rhs[(i, 0)] = b[i];
        }
        Ok(self.solve_matrix(&rhs)?.column(0))
    }
}

impl<T> Index<(usize, usize)> for DenseMatrix<T> {
    type Output = T;
    fn index(&self, (i, j): (usize, usize)) -> &T {
        &self.data[i * self.n + j]
    }
}

impl<T> IndexMut<(usize, usize)> for DenseMatrix<T> {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut T {
        &mut self.data[i * self.n + j]
    }
}
