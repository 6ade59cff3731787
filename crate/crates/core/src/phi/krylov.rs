use crate::linalg::{dense_phi_vec, DenseMatrix};
use crate::phi::{compose, PhiError, PhiResult, SubstepKernel};
use crate::scalar::{axpy, dot, norm2, norm_inf, Real};

/// Orthonormal Krylov basis and projected operator from Arnoldi's iteration.
#[derive(Clone, Debug)]
pub struct ArnoldiDecomposition<T> {
    /// `dim + 1` basis vectors, or `dim` after a happy breakdown.
    pub basis: Vec<Vec<T>>,
    /// Order `dim + 1`: `h[(i, j)] = h_{i+1,j+1}` for `j < dim`, last column zero.
    /// This is the bordered matrix `[[H_m, 0], [0 … h_{m+1,m}, 0]]`.
    pub hessenberg: DenseMatrix<T>,
    pub dim: usize,
    pub happy_breakdown: bool,
    /// `‖v‖₂` of the starting vector.
    pub beta: T,
    pub matvecs: usize,
}

impl<T: Real> ArnoldiDecomposition<T> {
    /// `H_m`, the leading `dim × dim` block.
    pub fn h_square(&self) -> DenseMatrix<T> {
        let m = self.dim;
        let mut h = DenseMatrix::zeros(m);
        for i in 0..m {
            for j in 0..m {
                h[(i, j)] = self.hessenberg[(i, j)];
            }
        }
        h
    }

    /// `h_{m+1,m}`; zero after a happy breakdown.
    pub fn h_next(&self) -> T {
        if self.dim == 0 {
            return T::zero();
        }
        self.hessenberg[(self.dim, self.dim - 1)]
    }
}

const BREAKDOWN_TOL: f64 = 1e-14;
const REORTH_TRIGGER: f64 = 1e-8;

/// Arnoldi's iteration with modified Gram–Schmidt and one selective
/// classical re-orthogonalization pass.
pub fn arnoldi<T: Real, F: FnMut(&[T], &mut [T])>(
    mut apply: F,
    v: &[T],
    m: usize,
) -> Result<ArnoldiDecomposition<T>, PhiError> {
    if m == 0 {
        return Err(PhiError::InvalidArgument("Krylov dimension must be >= 1".into()));
    }
    let n = v.len();
    let beta = norm2(v);
    if beta == T::zero() || !beta.is_finite() {
        return Err(PhiError::ZeroVector);
    }
    let m = m.min(n);
    let mut basis: Vec<Vec<T>> = Vec::with_capacity(m + 1);
    basis.push(v.iter().map(|&x| x / beta).collect());
    let mut h = DenseMatrix::zeros(m + 1);
    let mut w = vec![T::zero(); n];
    let mut matvecs = 0;

    for j in 0..m {
        apply(&basis[j], &mut w);
        matvecs += 1;
        let w_norm0 = norm2(&w);
        for i in 0..=j {
            let hij = dot(&w, &basis[i]);
            h[(i, j)] = hij;
            axpy(-hij, &basis[i], &mut w);
        }
        let mut hn = norm2(&w);
        if hn > T::zero() && hn > T::lit(BREAKDOWN_TOL) * w_norm0 {
            let worst = basis
                .iter()
                .map(|b| (dot(&w, b) / hn).abs())
                .fold(T::zero(), T::max);
            if worst > T::lit(REORTH_TRIGGER) {
                for i in 0..=j {
                    let c = dot(&w, &basis[i]);
                    h[(i, j)] += c;
                    axpy(-c, &basis[i], &mut w);
                }
                hn = norm2(&w);
            }
        }
        let exhausted = j + 1 == n;
        if hn <= T::lit(BREAKDOWN_TOL) * w_norm0 || exhausted {
            // invariant subspace: the projection is exact
            let dim = j + 1;
            let mut hb = DenseMatrix::zeros(dim + 1);
            for r in 0..dim {
                for c in 0..dim {
                    hb[(r, c)] = h[(r, c)];
                }
            }
            return Ok(ArnoldiDecomposition {
                basis,
                hessenberg: hb,
                dim,
                happy_breakdown: true,
                beta,
                matvecs,
            });
        }
        h[(j + 1, j)] = hn;
        basis.push(w.iter().map(|&x| x / hn).collect());
    }
    Ok(ArnoldiDecomposition {
        basis,
        hessenberg: h,
        dim: m,
        happy_breakdown: false,
        beta,
        matvecs,
    })
}

/// Krylov settings.
#[derive(Clone, Copy, Debug)]
pub struct KrylovOptions<T> {
    /// Subspace dimension `m`.
    pub dim: usize,
    /// Relative tolerance on the truncation estimate.
    pub tol: T,
}

impl<T: Real> Default for KrylovOptions<T> {
    fn default() -> Self {
        Self {
            dim: 10,
            tol: T::lit(1e-6),
        }
    }
}

struct KrylovKernel<T> {
    tau: T,
    opts: KrylovOptions<T>,
    matvecs: usize,
}

impl<T: Real> SubstepKernel<T> for KrylovKernel<T> {
    fn attempt<F: FnMut(&[T], &mut [T])>(
        &mut self,
        apply_j: &mut F,
        order: usize,
        delta: T,
        r: &[T],
        _weight: T,
    ) -> Result<Option<(Vec<T>, T)>, PhiError> {
        let dec = arnoldi(&mut *apply_j, r, self.opts.dim)?;
        self.matvecs += dec.matvecs;
        let scale = self.tau * delta;
        let (small, err) = if dec.happy_breakdown {
            let hm = dec.h_square().scaled(scale);
            let mut e1 = vec![T::zero(); dec.dim];
            e1[0] = T::one();
            (dense_phi_vec(order, &hm, &e1)?, T::zero())
        } else {
            let hb = dec.hessenberg.scaled(scale);
            let mut e1 = vec![T::zero(); dec.dim + 1];
            e1[0] = T::one();
            let u = dense_phi_vec(order, &hb, &e1)?;
            // the last coefficient equals τ h_{m+1,m} [φ_{i+1}(τH_m) e₁]_m,
            // the leading neglected term of the expansion
            let err = dec.beta * u[dec.dim].abs();
            (u, err)
        };
        let mut value = vec![T::zero(); r.len()];
        for (coef, b) in small.iter().zip(&dec.basis) {
            axpy(dec.beta * *coef, b, &mut value);
        }
        Ok(Some((value, err)))
    }

    fn accept(&self, err: T, w_new: &[T]) -> bool {
        err.is_finite() && err <= self.opts.tol * norm2(w_new)
    }

    fn matvecs(&self) -> usize {
        self.matvecs
    }
}

/// `φᵢ(τJ) v` by projection on the Krylov space `K_m(J, v)` through the bordered
/// Hessenberg matrix, splitting `τ` into halved substeps when the truncation
/// estimate exceeds `tol` relative to the result.
pub fn phi_krylov<T: Real, F: FnMut(&[T], &mut [T])>(
    mut apply_j: F,
    tau: T,
    v: &[T],
    order: usize,
    opts: KrylovOptions<T>,
) -> Result<PhiResult<T>, PhiError> {
    if !(tau > T::zero()) {
        return Err(PhiError::InvalidArgument("tau must be positive".into()));
    }
    if opts.dim == 0 || !(opts.tol > T::zero()) {
        return Err(PhiError::InvalidArgument("need m >= 1 and tol > 0".into()));
    }
    if norm_inf(v) == T::zero() {
        return Ok(PhiResult {
            value: vec![T::zero(); v.len()],
            err_estimate: T::zero(),
            matvec_count: 0,
            substeps: 0,
        });
    }
    let mut kernel = KrylovKernel {
        tau,
        opts,
        matvecs: 0,
    };
    let mut res = compose(&mut kernel, &mut apply_j, tau, v, order, T::one())?;
    let norm = norm2(&res.value);
    if norm > T::zero() {
        res.err_estimate /= norm;
    }
    Ok(res)
}

/// Finite-difference formula for matrix-free Jacobian products.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum FiniteDifference {
    #[default]
    Forward,
    Central,
}

/// `J(yₙ) v ≈ (f(yₙ + εv) − f(yₙ)) / ε` with `f(yₙ)` evaluated once.
pub struct JacobianFreeOperator<'a, T, F> {
    f: F,
    y: &'a [T],
    t: T,
    f0: Vec<T>,
    eps: T,
    scheme: FiniteDifference,
    pub rhs_evals: usize,
}

impl<'a, T: Real, F: FnMut(&[T], T) -> Vec<T>> JacobianFreeOperator<'a, T, F> {
    /// `eps = 0` selects `sqrt(machine ε)(1 + ‖y‖∞)/‖v‖₂` per product.
    pub fn new(mut f: F, y: &'a [T], t: T, eps: T, scheme: FiniteDifference) -> Self {
        let f0 = if scheme == FiniteDifference::Forward {
            f(y, t)
        } else {
            Vec::new()
        };
        Self {
            f,
            y,
            t,
            f0,
            eps,
            scheme,
            rhs_evals: 1,
        }
    }

    pub fn apply(&mut self, v: &[T], out: &mut [T]) {
        let vn = norm2(v);
        if vn == T::zero() {
            out.iter_mut().for_each(|o| *o = T::zero());
            return;
        }
        let eps = if self.eps > T::zero() {
            self.eps
        } else {
            T::epsilon().sqrt() * (T::one() + norm_inf(self.y)) / vn
        };
        let shifted =
            |sign: T| -> Vec<T> { self.y.iter().zip(v).map(|(&a, &b)| a + sign * eps * b).collect() };
        let plus = shifted(T::one());
        let fp = (self.f)(&plus, self.t);
        self.rhs_evals += 1;
        match self.scheme {
            FiniteDifference::Forward => {
                for ((o, a), b) in out.iter_mut().zip(&fp).zip(&self.f0) {
                    *o = (*a - *b) / eps;
                }
            }
            FiniteDifference::Central => {
                let minus = shifted(-T::one());
                let fm = (self.f)(&minus, self.t);
                self.rhs_evals += 1;
                let two = T::lit(2.0);
                for ((o, a), b) in out.iter_mut().zip(&fp).zip(&fm) {
                    *o = (*a - *b) / (two * eps);
                }
            }
        }
    }
}

/// Single matrix-free Jacobian–vector product.
pub fn jacobian_free_action<T: Real, F: FnMut(&[T], T) -> Vec<T>>(
    f: F,
    y: &[T],
    t: T,
    v: &[T],
    eps: T,
    scheme: FiniteDifference,
) -> Vec<T> {
    let mut out = vec![T::zero(); v.len()];
    if norm2(v) == T::zero() {
        return out;
    }
    let mut op = JacobianFreeOperator::new(f, y, t, eps, scheme);
    op.apply(v, &mut out);
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{dense_phi, CsrMatrix};

    fn apply_csr(a: &CsrMatrix<f64>) -> impl FnMut(&[f64], &mut [f64]) + '_ {
        move |x, y| a.spmv_into(x, y).unwrap()
    }

    #[test]
    fn identity_breaks_down_immediately() {
        let a = CsrMatrix::<f64>::identity(4);
        let dec = arnoldi(apply_csr(&a), &[1.0, 2.0, 0.0, -1.0], 5).unwrap();
        assert!(dec.happy_breakdown);
        assert_eq!(dec.dim, 1);
        assert!((dec.hessenberg[(0, 0)] - 1.0).abs() < 1e-15);
    }

    #[test]
    fn two_dimensional_space_is_full_space() {
        let a = CsrMatrix::from_diagonal(&[1.0, 2.0]);
        let s = 0.5f64.sqrt();
        let dec = arnoldi(apply_csr(&a), &[s, s], 2).unwrap();
        let h = dec.h_square();
        let tr = h[(0, 0)] + h[(1, 1)];
        let det = h[(0, 0)] * h[(1, 1)] - h[(0, 1)] * h[(1, 0)];
        assert!((tr - 3.0).abs() < 1e-14);
        assert!((det - 2.0).abs() < 1e-14);
    }

    #[test]
    fn zero_vector_rejected() {
        let a = CsrMatrix::<f64>::identity(2);
        assert!(matches!(
            arnoldi(apply_csr(&a), &[0.0, 0.0], 2),
            Err(PhiError::ZeroVector)
        ));
    }

    #[test]
    fn zero_operator_gives_v() {
        let a = CsrMatrix::<f64>::zeros(3, 3);
        let v = [1.0, -2.0, 0.5];
        let r = phi_krylov(apply_csr(&a), 1.0, &v, 1, KrylovOptions::default()).unwrap();
        assert_eq!(r.value, v.to_vec());
    }

    #[test]
    fn scalar_case() {
        let a = CsrMatrix::from_diagonal(&[-2.0]);
        let r = phi_krylov(apply_csr(&a), 1.0, &[3.0], 1, KrylovOptions::default()).unwrap();
        assert!((r.value[0] - 3.0 * 0.432_332_358_381_693_6).abs() < 1e-14);
    }

    #[test]
    fn substepping_on_stiff_laplacian() {
        let n = 60;
        let h2 = ((n + 1) as f64).powi(2);
        let a = CsrMatrix::tridiagonal(n, h2, -2.0 * h2, h2);
        let v: Vec<f64> = (0..n).map(|i| ((i * 7 % 11) as f64) - 5.0).collect();
        let tau = 0.02;
        let opts = KrylovOptions { dim: 10, tol: 1e-8 };
        let r = phi_krylov(apply_csr(&a), tau, &v, 1, opts).unwrap();
        assert!(r.substeps > 1);
        let exact = dense_phi(
            1,
            &crate::linalg::DenseMatrix::from_rows(&a.scaled(tau).to_dense_rows()).unwrap(),
        )
        .unwrap()
        .mul_vec(&v);
        let err: f64 = r.value.iter().zip(&exact).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
        assert!(err <= 1e-7 * norm2(&exact), "err {err}");
    }

    #[test]
    fn jacobian_free_linear_and_constant() {
        let f_const = |_: &[f64], _: f64| vec![1.0, 2.0];
        let jv = jacobian_free_action(f_const, &[1.0, 1.0], 0.0, &[1.0, 0.0], 0.0, FiniteDifference::Forward);
        assert_eq!(jv, vec![0.0, 0.0]);

        let sq = |y: &[f64], _: f64| y.iter().map(|v| v * v).collect::<Vec<_>>();
        let jv = jacobian_free_action(sq, &[1.0, 2.0], 0.0, &[1.0, 0.0], 0.0, FiniteDifference::Central);
        assert!((jv[0] - 2.0).abs() < 1e-8 && jv[1].abs() < 1e-12);

        let zero = jacobian_free_action(sq, &[1.0, 2.0], 0.0, &[0.0, 0.0], 0.0, FiniteDifference::Forward);
        assert_eq!(zero, vec![0.0, 0.0]);
    }
}
