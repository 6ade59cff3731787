//! Matrix exponential and φ-functions of small dense matrices.
//!
//! `φ₀(z) = eᶻ`, `φᵢ(z) = (φᵢ₋₁(z) − 1/(i−1)!) / z`, equivalently
//! `φᵢ(z) = ∫₀¹ e^{(1−s)z} s^{i−1}/(i−1)! ds`.

use crate::linalg::{DenseMatrix, LinalgError};
use crate::scalar::Real;

/// Padé(13,13) numerator coefficients.
const PADE13: [f64; 14] = [
    64764752532480000.0,
    32382376266240000.0,
    7771770303897600.0,
    1187353796428800.0,
    129060195264000.0,
    10559470521600.0,
    670442572800.0,
    33522128640.0,
    1323241920.0,
    40840800.0,
    960960.0,
    16380.0,
    182.0,
    1.0,
];

/// Scaling target for the 1-norm before the Padé evaluation.
const THETA13: f64 = 5.4;

/// `e^A` by degree-13 diagonal Padé approximation with scaling and squaring.
pub fn dense_expm<T: Real>(a: &DenseMatrix<T>) -> Result<DenseMatrix<T>, LinalgError> {
    if !a.is_finite() {
        return Err(LinalgError::NonFinite);
    }
    let n = a.dim();
    if n == 0 {
        return Ok(DenseMatrix::zeros(0));
    }
    let norm = a.norm1().to_f64().unwrap_or(f64::INFINITY);
    let s = if norm > THETA13 {
        (norm / THETA13).log2().ceil().max(0.0) as i32
    } else {
        0
    };
    let a = a.scaled(T::lit(2f64.powi(-s)));
    let b = |k: usize| T::lit(PADE13[k]);

    let a2 = a.matmul(&a);
    let a4 = a2.matmul(&a2);
    let a6 = a4.matmul(&a2);

    let mut u_inner = a6.scaled(b(13));
    u_inner.add_scaled(b(11), &a4);
    u_inner.add_scaled(b(9), &a2);
    let mut u = a6.matmul(&u_inner);
    u.add_scaled(b(7), &a6);
    u.add_scaled(b(5), &a4);
    u.add_scaled(b(3), &a2);
    u.add_identity(b(1));
    let u = a.matmul(&u);

    let mut v_inner = a6.scaled(b(12));
    v_inner.add_scaled(b(10), &a4);
    v_inner.add_scaled(b(8), &a2);
    let mut v = a6.matmul(&v_inner);
    v.add_scaled(b(6), &a6);
    v.add_scaled(b(4), &a4);
    v.add_scaled(b(2), &a2);
    v.add_identity(b(0));

    let mut num = v.clone();
    num.add_scaled(T::one(), &u);
    let mut den = v;
    den.add_scaled(-T::one(), &u);
    let mut r = den.solve_matrix(&num)?;
    for _ in 0..s {
        r = r.matmul(&r);
    }
    if !r.is_finite() {
        return Err(LinalgError::NonFinite);
    }
    Ok(r)
}

/// `φᵢ(A)` for `i ≥ 1`, read off the exponential of the block matrix
/// `[[A, I, 0, …], [0, 0, I, …], …, [0, …, 0]]` of order `n(i+1)`.
pub fn dense_phi<T: Real>(order: usize, a: &DenseMatrix<T>) -> Result<DenseMatrix<T>, LinalgError> {
    if order < 1 {
        return Err(LinalgError::InvalidArgument("phi order must be >= 1".into()));
    }
    let n = a.dim();
    let big = n * (order + 1);
    let mut m = DenseMatrix::zeros(big);
    for i in 0..n {
        for j in 0..n {
            m[(i, j)] = a[(i, j)];
        }
    }
    for blk in 0..order {
        for i in 0..n {
            m[(blk * n + i, (blk + 1) * n + i)] = T::one();
        }
    }
    let e = dense_expm(&m)?;
    let mut out = DenseMatrix::zeros(n);
    for i in 0..n {
        for j in 0..n {
            out[(i, j)] = e[(i, order * n + j)];
        }
    }
    Ok(out)
}

/// `φᵢ(A) v` for `i ≥ 0` through one exponential of order `n + i`:
/// `exp([[A, v e₁ᵀ], [0, K]])` with `K` the `i × i` upper shift; the action is
/// the top block of the last column.
pub fn dense_phi_vec<T: Real>(
    order: usize,
    a: &DenseMatrix<T>,
    v: &[T],
) -> Result<Vec<T>, LinalgError> {
    let n = a.dim();
    if v.len() != n {
        return Err(LinalgError::Dimension {
            expected: n,
            found: v.len(),
        });
    }
    if order == 0 {
        return Ok(dense_expm(a)?.mul_vec(v));
    }
    let scale = v.iter().fold(T::zero(), |m, x| m.max(x.abs()));
    if scale == T::zero() {
        return Ok(vec![T::zero(); n]);
    }
    let big = n + order;
    let mut m = DenseMatrix::zeros(big);
    for i in 0..n {
        for j in 0..n {
            m[(i, j)] = a[(i, j)];
        }
        m[(i, n)] = v[i] / scale;
    }
    for k in 0..order - 1 {
        m[(n + k, n + k + 1)] = T::one();
    }
    let e = dense_expm(&m)?;
    Ok((0..n).map(|i| e[(i, big - 1)] * scale).collect())
}

fn factorial<T: Real>(k: usize) -> T {
    (1..=k).fold(T::one(), |acc, j| acc * T::from_usize_lossy(j))
}

/// Scalar `φᵢ(z)`: Taylor series when `|z| < 0.5`, otherwise the recurrence from `eᶻ`.
pub fn phi_scalar<T: Real>(order: usize, z: T) -> T {
    if order == 0 {
        return z.exp();
    }
    if z.abs() < T::lit(0.5) {
        // φᵢ(z) = Σ_k z^k / (k+i)!
        let mut term = T::one() / factorial::<T>(order);
        let mut sum = term;
        let mut k = 0usize;
        while term.abs() > T::epsilon() * sum.abs() && k < 60 {
            k += 1;
            term = term * z / T::from_usize_lossy(k + order);
            sum += term;
        }
        return sum;
    }
    let mut phi = z.exp();
    for k in 1..=order {
        phi = (phi - T::one() / factorial::<T>(k - 1)) / z;
    }
    phi
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol * b.abs().max(1.0)
    }

    #[test]
    fn expm_of_zero_is_identity() {
        let e = dense_expm(&DenseMatrix::<f64>::zeros(3)).unwrap();
        assert_eq!(e, DenseMatrix::identity(3));
    }

    #[test]
    fn expm_diagonal() {
        let e = dense_expm(&DenseMatrix::from_diagonal(&[1.0, -1.0])).unwrap();
        assert!(close(e[(0, 0)], std::f64::consts::E, 1e-14));
        assert!(close(e[(1, 1)], (-1.0f64).exp(), 1e-14));
        assert_eq!(e[(0, 1)], 0.0);
    }

    #[test]
    fn expm_nilpotent() {
        let a = DenseMatrix::from_rows(&[vec![0.0, 1.0], vec![0.0, 0.0]]).unwrap();
        let e = dense_expm(&a).unwrap();
        assert_eq!(e, DenseMatrix::from_rows(&[vec![1.0, 1.0], vec![0.0, 1.0]]).unwrap());
    }

    #[test]
    fn expm_rejects_nan() {
        let a = DenseMatrix::from_rows(&[vec![f64::NAN]]).unwrap();
        assert!(matches!(dense_expm(&a), Err(LinalgError::NonFinite)));
    }

    #[test]
    fn expm_large_norm_scalar() {
        let e = dense_expm(&DenseMatrix::from_diagonal(&[-10.0, 10.0])).unwrap();
        assert!(close(e[(0, 0)], (-10.0f64).exp(), 1e-12));
        assert!(close(e[(1, 1)], 10.0f64.exp(), 1e-12));
    }

    #[test]
    fn phi_at_zero() {
        assert_eq!(phi_scalar(1, 0.0f64), 1.0);
        assert_eq!(phi_scalar(2, 0.0f64), 0.5);
        assert!(close(phi_scalar(3, 0.0f64), 1.0 / 6.0, 1e-15));
    }

    #[test]
    fn phi_scalar_branches_agree() {
        for &z in &[-0.49999, 0.49999, -0.5, 0.5, -3.0, 2.0] {
            let direct = ((z as f64).exp() - 1.0) / z;
            assert!(close(phi_scalar(1, z), direct, 1e-13), "z={z}");
        }
        // -2: (e^-2 - 1)/(-2)
        assert!(close(phi_scalar(1, -2.0), 0.432_332_358_381_693_6, 1e-15));
    }

    #[test]
    fn dense_phi_diagonal() {
        let p = dense_phi(1, &DenseMatrix::from_diagonal(&[1.0, -1.0])).unwrap();
        assert!(close(p[(0, 0)], std::f64::consts::E - 1.0, 1e-14));
        assert!(close(p[(1, 1)], 1.0 - (-1.0f64).exp(), 1e-14));
    }

    #[test]
    fn dense_phi_rejects_order_zero() {
        assert!(dense_phi(0, &DenseMatrix::<f64>::identity(2)).is_err());
    }

    #[test]
    fn phi_vec_matches_phi_matrix() {
        let a = DenseMatrix::from_rows(&[
            vec![-3.0, 1.0, 0.0],
            vec![0.5, -2.0, 0.2],
            vec![0.0, 1.0, -1.0],
        ])
        .unwrap();
        let v = [1.0, -2.0, 0.5];
        for order in 1..=3 {
            let full = dense_phi(order, &a).unwrap().mul_vec(&v);
            let act = dense_phi_vec(order, &a, &v).unwrap();
            for (x, y) in full.iter().zip(&act) {
                assert!(close(*x, *y, 1e-13));
            }
        }
    }

    #[test]
    fn f32_expm_smoke() {
        let e = dense_expm(&DenseMatrix::from_diagonal(&[1.0f32, -1.0])).unwrap();
        assert!((e[(0, 0)] - std::f32::consts::E).abs() < 1e-5);
    }
}
