//! Actions `φᵢ(τJ)v` of φ-functions of large sparse (or matrix-free) operators.
//!
//! Two backends share one substepping scheme. For `A = τJ` the function
//! `w(s) = sⁱ φᵢ(sA) v` solves `w' = A w + s^{i−1}/(i−1)! v`, `w(0) = 0`, so
//! `w(1) = φᵢ(A) v` can be advanced over `[0, 1]` in pieces of length `δ`,
//! each piece exact up to the accuracy of the short φ-actions it uses:
//!
//! `w(s+δ) = w(s) + δ φ₁(δA)(A w(s) + g(s)) + Σ_{k≥1} δ^{k+1} φ_{k+1}(δA) g⁽ᵏ⁾(s)`.

mod krylov;
mod leja;

pub use krylov::{
    arnoldi, jacobian_free_action, phi_krylov, ArnoldiDecomposition, FiniteDifference,
    JacobianFreeOperator, KrylovOptions,
};
pub use leja::{
    divided_differences, fast_leja_points, phi_leja, DividedDifferences, ErrorWindow,
    LejaControl, LejaSequence,
};

use thiserror::Error;

use crate::linalg::LinalgError;
use crate::scalar::{axpy, Real};

/// Result of one φ-action evaluation.
#[derive(Clone, Debug)]
pub struct PhiResult<T> {
    pub value: Vec<T>,
    pub err_estimate: T,
    pub matvec_count: usize,
    pub substeps: usize,
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PhiError {
    #[error("zero starting vector")]
    ZeroVector,
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("no convergence after {substeps} substeps (best error estimate {estimate:.3e})")]
    NotConverged { substeps: usize, estimate: f64 },
    #[error(transparent)]
    Linalg(#[from] LinalgError),
}

/// Hard cap on substep attempts per φ-action.
pub const MAX_SUBSTEPS: usize = 1000;

/// One short φ-action `φ_k(δτJ) r`. Returns `None` when the backend cannot
/// reach its accuracy target at this `δ`; `weight` is the factor the result is
/// multiplied with before it enters the composed solution.
pub(crate) trait SubstepKernel<T: Real> {
    fn attempt<F: FnMut(&[T], &mut [T])>(
        &mut self,
        apply_j: &mut F,
        order: usize,
        delta: T,
        r: &[T],
        weight: T,
    ) -> Result<Option<(Vec<T>, T)>, PhiError>;

    /// Accept a composed increment with absolute error `err` given the new iterate.
    fn accept(&self, err: T, w_new: &[T]) -> bool;

    fn matvecs(&self) -> usize;
}

fn factorial<T: Real>(k: usize) -> T {
    (1..=k).fold(T::one(), |acc, j| acc * T::from_usize_lossy(j))
}

/// Composes `φ_order(τJ) v` from substeps, starting with step `delta0 ≤ 1`
/// (fractions of the unit interval) and halving on every rejection.
pub(crate) fn compose<T: Real, F: FnMut(&[T], &mut [T]), K: SubstepKernel<T>>(
    kernel: &mut K,
    apply_j: &mut F,
    tau: T,
    v: &[T],
    order: usize,
    delta0: T,
) -> Result<PhiResult<T>, PhiError> {
    let n = v.len();
    let one = T::one();
    let mut extra_matvecs = 0usize;

    if delta0 >= one {
        if let Some((value, err)) = kernel.attempt(apply_j, order, one, v, one)? {
            if kernel.accept(err, &value) {
                return Ok(PhiResult {
                    value,
                    err_estimate: err,
                    matvec_count: kernel.matvecs(),
                    substeps: 1,
                });
            }
        }
    }

    let mut delta = if delta0 >= one { T::lit(0.5) } else { delta0 };
    let mut w = vec![T::zero(); n];
    let mut s = T::zero();
    let mut attempts = 0usize;
    let mut accepted = 0usize;
    let mut err_total = T::zero();
    let mut aw = vec![T::zero(); n];
    let mut last_err = T::infinity();

    while s < one {
        if attempts >= MAX_SUBSTEPS {
            return Err(PhiError::NotConverged {
                substeps: attempts,
                estimate: last_err.to_f64().unwrap_or(f64::NAN),
            });
        }
        attempts += 1;
        let d = delta.min(one - s);

        // r = A w + g(s), g(s) = s^{order-1}/(order-1)! v
        if s > T::zero() {
            apply_j(&w, &mut aw);
            extra_matvecs += 1;
        }
        let g0 = s.powi(order as i32 - 1) / factorial::<T>(order - 1);
        let r: Vec<T> = aw.iter().zip(v).map(|(&a, &vi)| tau * a + g0 * vi).collect();

        let mut incr = vec![T::zero(); n];
        let mut err = T::zero();
        let mut ok = true;
        if r.iter().any(|&x| x != T::zero()) {
            match kernel.attempt(apply_j, 1, d, &r, d)? {
                Some((val, e)) => {
                    axpy(d, &val, &mut incr);
                    err += d * e;
                }
                None => ok = false,
            }
        }
        let mut k = 1;
        while ok && k < order {
            // g^{(k)}(s) = s^{order-1-k}/(order-1-k)! v
            let gk = s.powi((order - 1 - k) as i32) / factorial::<T>(order - 1 - k);
            if gk != T::zero() {
                let coeff = d.powi(k as i32 + 1);
                let rk: Vec<T> = v.iter().map(|&vi| gk * vi).collect();
                match kernel.attempt(apply_j, k + 1, d, &rk, coeff)? {
                    Some((val, e)) => {
                        axpy(coeff, &val, &mut incr);
                        err += coeff * e;
                    }
                    None => ok = false,
                }
            }
            k += 1;
        }

        if ok {
            let w_new: Vec<T> = w.iter().zip(&incr).map(|(&a, &b)| a + b).collect();
            if kernel.accept(err / d, &w_new) {
                w = w_new;
                s += d;
                accepted += 1;
                err_total += err;
                continue;
            }
            last_err = err;
        }
        delta = d * T::lit(0.5);
    }

    Ok(PhiResult {
        value: w,
        err_estimate: err_total,
        matvec_count: kernel.matvecs() + extra_matvecs,
        substeps: accepted,
    })
}
