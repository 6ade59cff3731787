use crate::linalg::{CsrMatrix, Ilu0, LinalgError};
use crate::scalar::{axpy, dot, norm2, Real};

/// Outcome of an iterative linear solve.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LinearSolveReport<T> {
    pub iterations: usize,
    /// `‖b − A x‖₂ / ‖b‖₂`, recomputed from the returned iterate.
    pub final_residual: T,
    pub converged: bool,
    /// Set when ρ or ω vanished.
    pub breakdown: bool,
}

fn true_residual<T: Real>(a: &CsrMatrix<T>, b: &[T], x: &[T], r: &mut [T]) -> T {
    a.spmv_into(x, r).expect("dimensions checked");
    for (ri, &bi) in r.iter_mut().zip(b) {
        *ri = bi - *ri;
    }
    norm2(r)
}

/// Right-preconditioned BiCGStab. `precond` applies `M⁻¹` in place; `None` runs unpreconditioned.
pub fn bicgstab<T: Real>(
    a: &CsrMatrix<T>,
    b: &[T],
    x0: &[T],
    precond: Option<&Ilu0<T>>,
    tol: T,
    max_iter: usize,
) -> Result<(Vec<T>, LinearSolveReport<T>), LinalgError> {
    if !a.is_square() {
        return Err(LinalgError::NotSquare(a.n_rows(), a.n_cols()));
    }
    let n = a.n_rows();
    if b.len() != n || x0.len() != n {
        return Err(LinalgError::Dimension {
            expected: n,
            found: if b.len() != n { b.len() } else { x0.len() },
        });
    }
    if tol <= T::zero() {
        return Err(LinalgError::InvalidArgument("tolerance must be positive".into()));
    }

    let b_norm = norm2(b);
    if b_norm == T::zero() {
        return Ok((
            vec![T::zero(); n],
            LinearSolveReport {
                iterations: 0,
                final_residual: T::zero(),
                converged: true,
                breakdown: false,
            },
        ));
    }
    let target = tol * b_norm;
    let precondition = |src: &[T], dst: &mut Vec<T>| {
        dst.copy_from_slice(src);
        if let Some(m) = precond {
            m.apply(dst);
        }
    };

    let mut x = x0.to_vec();
    let mut r = vec![T::zero(); n];
    let mut res = true_residual(a, b, &x, &mut r);
    if res <= target {
        return Ok((
            x,
            LinearSolveReport {
                iterations: 0,
                final_residual: res / b_norm,
                converged: true,
                breakdown: false,
            },
        ));
    }

    let mut r_hat = r.clone();
    let mut p = vec![T::zero(); n];
    let mut v = vec![T::zero(); n];
    let mut p_hat = vec![T::zero(); n];
    let mut s = vec![T::zero(); n];
    let mut s_hat = vec![T::zero(); n];
    let mut t = vec![T::zero(); n];
    let mut scratch = vec![T::zero(); n];
    let (mut rho, mut alpha, mut omega) = (T::one(), T::one(), T::one());
    let mut breakdown = false;

    let mut it = 0;
    while it < max_iter {
        it += 1;
        let rho_new = dot(&r_hat, &r);
        if rho_new == T::zero() || !rho_new.is_finite() {
            breakdown = true;
            break;
        }
        let beta = (rho_new / rho) * (alpha / omega);
        rho = rho_new;
        for i in 0..n {
            p[i] = r[i] + beta * (p[i] - omega * v[i]);
        }
        precondition(&p, &mut p_hat);
        a.spmv_into(&p_hat, &mut v)?;
        let denom = dot(&r_hat, &v);
        if denom == T::zero() || !denom.is_finite() {
            breakdown = true;
            break;
        }
        alpha = rho / denom;
        for i in 0..n {
            s[i] = r[i] - alpha * v[i];
        }
        if norm2(&s) <= target {
            axpy(alpha, &p_hat, &mut x);
            res = true_residual(a, b, &x, &mut scratch);
            if res <= target {
                return Ok((
                    x,
                    LinearSolveReport {
                        iterations: it,
                        final_residual: res / b_norm,
                        converged: true,
                        breakdown: false,
                    },
                ));
            }
            // recurrence drifted from the true residual: restart from it
            r.copy_from_slice(&scratch);
            r_hat.copy_from_slice(&r);
            p.iter_mut().for_each(|e| *e = T::zero());
            v.iter_mut().for_each(|e| *e = T::zero());
            rho = T::one();
            alpha = T::one();
            omega = T::one();
            continue;
        }
        precondition(&s, &mut s_hat);
        a.spmv_into(&s_hat, &mut t)?;
        let tt = dot(&t, &t);
        omega = if tt > T::zero() { dot(&t, &s) / tt } else { T::zero() };
        axpy(alpha, &p_hat, &mut x);
        axpy(omega, &s_hat, &mut x);
        if omega == T::zero() || !omega.is_finite() {
            breakdown = true;
            break;
        }
        for i in 0..n {
            r[i] = s[i] - omega * t[i];
        }
        if norm2(&r) <= target {
            res = true_residual(a, b, &x, &mut scratch);
            if res <= target {
                return Ok((
                    x,
                    LinearSolveReport {
                        iterations: it,
                        final_residual: res / b_norm,
                        converged: true,
                        breakdown: false,
                    },
                ));
            }
            r.copy_from_slice(&scratch);
            r_hat.copy_from_slice(&r);
            p.iter_mut().for_each(|e| *e = T::zero());
            v.iter_mut().for_each(|e| *e = T::zero());
            rho = T::one();
            alpha = T::one();
            omega = T::one();
        }
    }

    res = true_residual(a, b, &x, &mut scratch);
    if !res.is_finite() {
        x.copy_from_slice(x0);
        res = true_residual(a, b, &x, &mut scratch);
    }
    Ok((
        x,
        LinearSolveReport {
            iterations: it,
            final_residual: res / b_norm,
            converged: res <= target,
            breakdown,
        },
    ))
}

/// BiCGStab preconditioned by ILU(0) factors computed on `a`'s own pattern.
pub fn bicgstab_ilu0<T: Real>(
    a: &CsrMatrix<T>,
    b: &[T],
    x0: &[T],
    tol: T,
    max_iter: usize,
) -> Result<(Vec<T>, LinearSolveReport<T>), LinalgError> {
    let ilu = Ilu0::new(a)?;
    bicgstab(a, b, x0, Some(&ilu), tol, max_iter)
}

/// Solver for repeated right-hand sides against one matrix, with the
/// factorization computed once. Falls back to an unpreconditioned restart
/// when the preconditioned iteration breaks down or stalls.
#[derive(Debug)]
pub struct LinearSolver<T> {
    matrix: CsrMatrix<T>,
    ilu: Ilu0<T>,
    pub tol: T,
    pub max_iter: usize,
}

impl<T: Real> LinearSolver<T> {
    pub fn new(matrix: CsrMatrix<T>, tol: T, max_iter: usize) -> Result<Self, LinalgError> {
        let ilu = Ilu0::new(&matrix)?;
        Ok(Self {
            matrix,
            ilu,
            tol,
            max_iter,
        })
    }

    pub fn matrix(&self) -> &CsrMatrix<T> {
        &self.matrix
    }

    pub fn solve(&self, b: &[T], x0: &[T]) -> Result<(Vec<T>, LinearSolveReport<T>), LinalgError> {
        let (x, rep) = bicgstab(&self.matrix, b, x0, Some(&self.ilu), self.tol, self.max_iter)?;
        if rep.converged {
            return Ok((x, rep));
        }
        let (x2, rep2) = bicgstab(&self.matrix, b, &x, None, self.tol, self.max_iter)?;
        let merged = LinearSolveReport {
            iterations: rep.iterations + rep2.iterations,
            ..rep2
        };
        if merged.converged {
            Ok((x2, merged))
        } else {
            Err(LinalgError::NotConverged {
                iterations: merged.iterations,
                residual: merged.final_residual.to_f64().unwrap_or(f64::NAN),
            })
        }
    }
}
