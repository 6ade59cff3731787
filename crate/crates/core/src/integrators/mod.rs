//! Time steppers for `y' = f(t, y)`: θ-Euler with Newton, exponential
//! Rosenbrock–Euler, one-stage ROSM(γ), s-stage Rosenbrock with embedded
//! solutions, stability functions and step-size control.

mod control;
mod jacobian;
mod stability;
mod steps;
mod tableau;

pub use control::{
    adapt_step, integrate_adaptive, integrate_fixed, weighted_error_norm, AdaptiveReport,
    StepController,
};
pub use jacobian::{distance2_coloring, ColoredJacobian};
pub use stability::stability_function;
pub use steps::{
    erem_step_autonomous, erem_step_nonautonomous, rosenbrock_s_stage_step, rosm_step,
    theta_euler_step, Stepper, StepOutput,
};
pub use tableau::RosenbrockTableau;

use std::fmt;

use thiserror::Error;

use crate::linalg::{CsrMatrix, LinalgError};
use crate::phi::{KrylovOptions, LejaControl, PhiError};
use crate::scalar::Real;

/// Failure reported by a right-hand side or Jacobian callback.
#[derive(Debug, Error, Clone, PartialEq)]
#[error("{0}")]
pub struct ModelError(pub String);

#[derive(Debug, Error, Clone, PartialEq)]
pub enum StepError {
    #[error("model evaluation failed: {0}")]
    Model(#[from] ModelError),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
    #[error(transparent)]
    Phi(#[from] PhiError),
    #[error("Newton iteration did not converge in {iterations} iterations")]
    NewtonDiverged { iterations: usize },
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("pole of the stability function")]
    Pole,
    #[error("step size underflow at t = {t:.6e}")]
    StepTooSmall { t: f64 },
}

/// Semi-discrete system `y' = f(t, y)`.
pub trait OdeSystem<T: Real> {
    fn dim(&self) -> usize;

    fn rhs(&self, t: T, y: &[T], out: &mut [T]) -> Result<(), ModelError>;

    /// `∂f/∂y` at `(t, y)`.
    fn jacobian(&self, t: T, y: &[T]) -> Result<CsrMatrix<T>, ModelError>;

    /// `true` when `f` does not depend on `t`.
    fn is_autonomous(&self) -> bool {
        false
    }

    /// `∂f/∂t`, by default a central difference in `t`; `None` for autonomous systems.
    fn time_derivative(&self, t: T, y: &[T]) -> Result<Option<Vec<T>>, ModelError> {
        if self.is_autonomous() {
            return Ok(None);
        }
        let h = T::epsilon().cbrt() * (T::one() + t.abs());
        let n = self.dim();
        let mut fp = vec![T::zero(); n];
        let mut fm = vec![T::zero(); n];
        self.rhs(t + h, y, &mut fp)?;
        self.rhs(t - h, y, &mut fm)?;
        let two_h = h + h;
        Ok(Some(fp.iter().zip(&fm).map(|(&a, &b)| (a - b) / two_h).collect()))
    }
}

/// Work spent by a stepper.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct WorkCounters {
    pub steps: usize,
    pub rejected: usize,
    pub rhs_evals: usize,
    pub jacobian_evals: usize,
    pub newton_iterations: usize,
    pub linear_solves: usize,
    pub linear_iterations: usize,
    pub matvecs: usize,
    pub phi_substeps: usize,
}

impl WorkCounters {
    pub fn merge(&mut self, o: &WorkCounters) {
        self.steps += o.steps;
        self.rejected += o.rejected;
        self.rhs_evals += o.rhs_evals;
        self.jacobian_evals += o.jacobian_evals;
        self.newton_iterations += o.newton_iterations;
        self.linear_solves += o.linear_solves;
        self.linear_iterations += o.linear_iterations;
        self.matvecs += o.matvecs;
        self.phi_substeps += o.phi_substeps;
    }
}

/// Which backend evaluates φ-actions.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum PhiBackendKind {
    Krylov,
    Leja,
}

/// φ-action backend with its settings.
#[derive(Clone, Copy, Debug)]
pub enum PhiBackend<T> {
    Krylov(KrylovOptions<T>),
    Leja(LejaControl<T>),
}

/// Time-stepping scheme.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum SchemeId {
    ThetaEuler(f64),
    Erem(PhiBackendKind),
    Rosm(f64),
    Ros2,
    Ros3p,
}

impl SchemeId {
    /// Classical order on smooth problems.
    pub fn order(&self) -> u32 {
        match *self {
            SchemeId::ThetaEuler(th) | SchemeId::Rosm(th) if th == 0.5 => 2,
            SchemeId::ThetaEuler(_) | SchemeId::Rosm(_) => 1,
            SchemeId::Erem(_) | SchemeId::Ros2 => 2,
            SchemeId::Ros3p => 3,
        }
    }

    pub fn validate(&self) -> Result<(), StepError> {
        match *self {
            SchemeId::ThetaEuler(th) if !(0.0..=1.0).contains(&th) => Err(
                StepError::InvalidArgument(format!("theta must lie in [0, 1], got {th}")),
            ),
            SchemeId::Rosm(g) if !(g > 0.0) => Err(StepError::InvalidArgument(format!(
                "gamma must be positive, got {g}"
            ))),
            _ => Ok(()),
        }
    }
}

impl fmt::Display for SchemeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SchemeId::ThetaEuler(th) => write!(f, "ThetaEuler({th})"),
            SchemeId::Erem(PhiBackendKind::Krylov) => write!(f, "EREM(Krylov)"),
            SchemeId::Erem(PhiBackendKind::Leja) => write!(f, "EREM(Leja)"),
            SchemeId::Rosm(g) => write!(f, "ROSM({g})"),
            SchemeId::Ros2 => write!(f, "ROS2(1)"),
            SchemeId::Ros3p => write!(f, "ROS3p"),
        }
    }
}

/// Newton settings for the θ-Euler solve; convergence when every component of
/// the update satisfies `|Δᵢ| ≤ tol_a + tol_r |Xᵢ|`.
#[derive(Clone, Copy, Debug)]
pub struct NewtonSettings<T> {
    pub tol_a: T,
    pub tol_r: T,
    pub max_iter: usize,
}

impl<T: Real> Default for NewtonSettings<T> {
    fn default() -> Self {
        Self {
            tol_a: T::lit(1e-6),
            tol_r: T::lit(1e-6),
            max_iter: 25,
        }
    }
}

/// BiCGStab settings (relative residual tolerance).
#[derive(Clone, Copy, Debug)]
pub struct LinearSettings<T> {
    pub tol: T,
    pub max_iter: usize,
}

impl<T: Real> Default for LinearSettings<T> {
    fn default() -> Self {
        Self {
            tol: T::lit(1e-10),
            max_iter: 1000,
        }
    }
}
