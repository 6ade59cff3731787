use crate::integrators::{OdeSystem, StepError, Stepper, WorkCounters};
use crate::scalar::Real;

/// Step-size controller state.
#[derive(Clone, Copy, Debug)]
pub struct StepController<T> {
    pub tol_a: T,
    pub tol_r: T,
    pub safety: T,
    pub fac_min: T,
    pub fac_max: T,
    pub tau: T,
}

impl<T: Real> StepController<T> {
    pub fn new(tau: T, tol_a: T, tol_r: T) -> Self {
        Self {
            tol_a,
            tol_r,
            safety: T::lit(0.9),
            fac_min: T::lit(0.2),
            fac_max: T::lit(5.0),
            tau,
        }
    }

    pub fn validate(&self) -> Result<(), StepError> {
        let ok = self.tol_a > T::zero()
            && self.tol_r >= T::zero()
            && self.safety > T::zero()
            && self.safety <= T::one()
            && self.fac_min > T::zero()
            && self.fac_min < T::one()
            && self.fac_max > T::one()
            && self.tau > T::zero();
        if ok {
            Ok(())
        } else {
            Err(StepError::InvalidArgument("inconsistent step controller".into()))
        }
    }
}

/// `sqrt(mean(((y − ŷ)ᵢ / (tol_a + tol_r·max(|yⁿᵢ|, |yᵢ|)))²))`.
pub fn weighted_error_norm<T: Real>(y: &[T], y_hat: &[T], y_old: &[T], tol_a: T, tol_r: T) -> T {
    let n = T::from_usize_lossy(y.len().max(1));
    let s: T = y
        .iter()
        .zip(y_hat)
        .zip(y_old)
        .map(|((&a, &b), &o)| {
            let sc = tol_a + tol_r * a.abs().max(o.abs());
            ((a - b) / sc).powi(2)
        })
        .sum();
    (s / n).sqrt()
}

/// Accepts iff `err ≤ 1`; proposes `τ·clamp(safety·err^{−1/p}, fac_min, fac_max)`.
pub fn adapt_step<T: Real>(ctrl: &StepController<T>, err: T, p: u32) -> (bool, T) {
    let accept = err <= T::one();
    let fac = if err == T::zero() {
        ctrl.fac_max
    } else {
        (ctrl.safety * err.powf(-T::one() / T::from_usize_lossy(p as usize)))
            .max(ctrl.fac_min)
            .min(ctrl.fac_max)
    };
    (accept, ctrl.tau * fac)
}

/// Integrates with a constant step; the last step is shortened to hit `t_end`.
pub fn integrate_fixed<T: Real, S: OdeSystem<T> + ?Sized>(
    stepper: &Stepper<T>,
    sys: &S,
    t0: T,
    y0: &[T],
    t_end: T,
    tau: T,
    work: &mut WorkCounters,
) -> Result<Vec<T>, StepError> {
    let mut y = y0.to_vec();
    let mut t = t0;
    let eps = T::lit(1e-12) * (t_end - t0).abs().max(T::one());
    while t_end - t > eps {
        let h = tau.min(t_end - t);
        y = stepper.step(sys, t, &y, h, work)?.y;
        t += h;
    }
    Ok(y)
}

/// Outcome of an adaptive integration.
#[derive(Clone, Debug)]
pub struct AdaptiveReport<T> {
    pub y: Vec<T>,
    pub accepted: usize,
    pub rejected: usize,
    pub last_tau: T,
}

/// Integrates with embedded error control; the scheme must provide an
/// embedded solution.
pub fn integrate_adaptive<T: Real, S: OdeSystem<T> + ?Sized>(
    stepper: &Stepper<T>,
    sys: &S,
    t0: T,
    y0: &[T],
    t_end: T,
    mut ctrl: StepController<T>,
    work: &mut WorkCounters,
) -> Result<AdaptiveReport<T>, StepError> {
    ctrl.validate()?;
    let p = stepper.scheme.order();
    let mut y = y0.to_vec();
    let mut t = t0;
    let (mut accepted, mut rejected) = (0, 0);
    let span = (t_end - t0).abs().max(T::one());
    let tau_floor = T::lit(1e-14) * span;
    while t_end - t > T::lit(1e-12) * span {
        let h = ctrl.tau.min(t_end - t);
        if h < tau_floor {
            return Err(StepError::StepTooSmall {
                t: t.to_f64().unwrap_or(f64::NAN),
            });
        }
        ctrl.tau = h;
        let out = match stepper.step(sys, t, &y, h, work) {
            Ok(o) => o,
            Err(StepError::Linalg(_)) | Err(StepError::NewtonDiverged { .. }) => {
                rejected += 1;
                work.rejected += 1;
                ctrl.tau = h * T::lit(0.5);
                continue;
            }
            Err(e) => return Err(e),
        };
        let emb = out.embedded.ok_or_else(|| {
            StepError::InvalidArgument(format!("{} has no embedded solution", stepper.scheme))
        })?;
        let err = weighted_error_norm(&out.y, &emb, &y, ctrl.tol_a, ctrl.tol_r);
        let (ok, next) = adapt_step(&ctrl, err, p);
        if ok && err.is_finite() {
            y = out.y;
            t += h;
            accepted += 1;
        } else {
            rejected += 1;
            work.rejected += 1;
        }
        ctrl.tau = if err.is_finite() { next } else { h * ctrl.fac_min };
    }
    Ok(AdaptiveReport {
        y,
        accepted,
        rejected,
        last_tau: ctrl.tau,
    })
}
