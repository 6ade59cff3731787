use crate::integrators::{
    LinearSettings, NewtonSettings, OdeSystem, PhiBackend, PhiBackendKind, RosenbrockTableau,
    SchemeId, StepError, WorkCounters,
};
use crate::linalg::{CsrMatrix, LinearSolver};
use crate::phi::{phi_krylov, phi_leja, KrylovOptions, LejaControl};
use crate::scalar::{axpy, norm_inf, Real};

fn eval_rhs<T: Real, S: OdeSystem<T> + ?Sized>(
    sys: &S,
    t: T,
    y: &[T],
    work: &mut WorkCounters,
) -> Result<Vec<T>, StepError> {
    let mut out = vec![T::zero(); y.len()];
    sys.rhs(t, y, &mut out)?;
    work.rhs_evals += 1;
    Ok(out)
}

fn eval_jacobian<T: Real, S: OdeSystem<T> + ?Sized>(
    sys: &S,
    t: T,
    y: &[T],
    work: &mut WorkCounters,
) -> Result<CsrMatrix<T>, StepError> {
    let j = sys.jacobian(t, y)?;
    work.jacobian_evals += 1;
    Ok(j)
}

fn check_tau<T: Real>(tau: T) -> Result<(), StepError> {
    if tau > T::zero() && tau.is_finite() {
        Ok(())
    } else {
        Err(StepError::InvalidArgument("tau must be positive and finite".into()))
    }
}

fn linear_solve<T: Real>(
    solver: &LinearSolver<T>,
    b: &[T],
    work: &mut WorkCounters,
) -> Result<Vec<T>, StepError> {
    let x0 = vec![T::zero(); b.len()];
    let (x, rep) = solver.solve(b, &x0)?;
    work.linear_solves += 1;
    work.linear_iterations += rep.iterations;
    work.matvecs += 2 * rep.iterations + 1;
    Ok(x)
}

/// `X = yⁿ + τθ f(X, tₙ₊₁) + τ(1−θ) f(yⁿ, tₙ)` by Newton's method with a
/// fresh Jacobian every iteration; `θ = 0` is the explicit Euler step.
#[allow(clippy::too_many_arguments)]
pub fn theta_euler_step<T: Real, S: OdeSystem<T> + ?Sized>(
    sys: &S,
    t: T,
    y: &[T],
    tau: T,
    theta: T,
    newton: &NewtonSettings<T>,
    linear: &LinearSettings<T>,
    work: &mut WorkCounters,
) -> Result<Vec<T>, StepError> {
    check_tau(tau)?;
    if !(theta >= T::zero() && theta <= T::one()) {
        return Err(StepError::InvalidArgument("theta must lie in [0, 1]".into()));
    }
    let f_n = eval_rhs(sys, t, y, work)?;
    if theta == T::zero() {
        let mut out = y.to_vec();
        axpy(tau, &f_n, &mut out);
        return Ok(out);
    }
    let t1 = t + tau;
    let explicit = tau * (T::one() - theta);
    let mut x = y.to_vec();
    for it in 1..=newton.max_iter {
        work.newton_iterations += 1;
        let fx = eval_rhs(sys, t1, &x, work)?;
        let residual: Vec<T> = (0..x.len())
            .map(|i| -(x[i] - tau * theta * fx[i] - explicit * f_n[i] - y[i]))
            .collect();
        let jac = eval_jacobian(sys, t1, &x, work)?;
        let m = jac.shifted(T::one(), -tau * theta)?;
        let solver = LinearSolver::new(m, linear.tol, linear.max_iter)?;
        let dx = linear_solve(&solver, &residual, work)?;
        let mut converged = true;
        for (xi, &d) in x.iter_mut().zip(&dx) {
            *xi += d;
            if !(d.abs() <= newton.tol_a + newton.tol_r * xi.abs()) {
                converged = false;
            }
        }
        if x.iter().any(|v| !v.is_finite()) {
            return Err(StepError::NewtonDiverged { iterations: it });
        }
        if converged {
            return Ok(x);
        }
    }
    Err(StepError::NewtonDiverged {
        iterations: newton.max_iter,
    })
}

fn phi_action<T: Real>(
    backend: &PhiBackend<T>,
    jac: &CsrMatrix<T>,
    tau: T,
    v: &[T],
    order: usize,
    y_norm: T,
    work: &mut WorkCounters,
) -> Result<Vec<T>, StepError> {
    let apply = |x: &[T], out: &mut [T]| jac.spmv_into(x, out).expect("square Jacobian");
    let res = match backend {
        PhiBackend::Krylov(opts) => phi_krylov(apply, tau, v, order, *opts)?,
        PhiBackend::Leja(ctrl) => {
            let interval = jac.gershgorin_interval()?;
            phi_leja(apply, tau, v, order, interval, *ctrl, y_norm)?
        }
    };
    work.matvecs += res.matvec_count;
    work.phi_substeps += res.substeps;
    Ok(res.value)
}

/// `yⁿ⁺¹ = yⁿ + φ₁(τJₙ)(τ f(yⁿ))`: one φ-action per step.
pub fn erem_step_autonomous<T: Real, S: OdeSystem<T> + ?Sized>(
    sys: &S,
    t: T,
    y: &[T],
    tau: T,
    backend: &PhiBackend<T>,
    work: &mut WorkCounters,
) -> Result<Vec<T>, StepError> {
    check_tau(tau)?;
    let f = eval_rhs(sys, t, y, work)?;
    let mut out = y.to_vec();
    if norm_inf(&f) == T::zero() {
        return Ok(out);
    }
    let jac = eval_jacobian(sys, t, y, work)?;
    let v: Vec<T> = f.iter().map(|&x| tau * x).collect();
    let d = phi_action(backend, &jac, tau, &v, 1, norm_inf(y), work)?;
    axpy(T::one(), &d, &mut out);
    Ok(out)
}

/// `yⁿ⁺¹ = yⁿ + τφ₁(τJₙ)f + τ²φ₂(τJₙ)∂ₜf`.
pub fn erem_step_nonautonomous<T: Real, S: OdeSystem<T> + ?Sized>(
    sys: &S,
    t: T,
    y: &[T],
    tau: T,
    df_dt: &[T],
    backend: &PhiBackend<T>,
    work: &mut WorkCounters,
) -> Result<Vec<T>, StepError> {
    check_tau(tau)?;
    let f = eval_rhs(sys, t, y, work)?;
    let mut out = y.to_vec();
    let f_zero = norm_inf(&f) == T::zero();
    let ft_zero = norm_inf(df_dt) == T::zero();
    if f_zero && ft_zero {
        return Ok(out);
    }
    let jac = eval_jacobian(sys, t, y, work)?;
    let y_norm = norm_inf(y);
    if !f_zero {
        let v: Vec<T> = f.iter().map(|&x| tau * x).collect();
        let d = phi_action(backend, &jac, tau, &v, 1, y_norm, work)?;
        axpy(T::one(), &d, &mut out);
    }
    if !ft_zero {
        let v: Vec<T> = df_dt.iter().map(|&x| tau * tau * x).collect();
        let d = phi_action(backend, &jac, tau, &v, 2, y_norm, work)?;
        axpy(T::one(), &d, &mut out);
    }
    Ok(out)
}

/// `yⁿ⁺¹ = yⁿ + τ(I − τγJₙ)⁻¹(f + γτ∂ₜf)`: one linear solve per step.
#[allow(clippy::too_many_arguments)]
pub fn rosm_step<T: Real, S: OdeSystem<T> + ?Sized>(
    sys: &S,
    t: T,
    y: &[T],
    tau: T,
    gamma: T,
    df_dt: Option<&[T]>,
    linear: &LinearSettings<T>,
    work: &mut WorkCounters,
) -> Result<Vec<T>, StepError> {
    check_tau(tau)?;
    if !(gamma > T::zero()) {
        return Err(StepError::InvalidArgument("gamma must be positive".into()));
    }
    let mut rhs = eval_rhs(sys, t, y, work)?;
    if let Some(ft) = df_dt {
        axpy(gamma * tau, ft, &mut rhs);
    }
    let mut out = y.to_vec();
    if norm_inf(&rhs) == T::zero() {
        return Ok(out);
    }
    let jac = eval_jacobian(sys, t, y, work)?;
    let solver = LinearSolver::new(jac.shifted(T::one(), -tau * gamma)?, linear.tol, linear.max_iter)?;
    let x = linear_solve(&solver, &rhs, work)?;
    axpy(tau, &x, &mut out);
    Ok(out)
}

/// One step of an s-stage Rosenbrock scheme; returns the main and the
/// embedded solution. All stages share `I/(τγ) − Jₙ` and its ILU(0) factors.
#[allow(clippy::too_many_arguments)]
pub fn rosenbrock_s_stage_step<T: Real, S: OdeSystem<T> + ?Sized>(
    sys: &S,
    t: T,
    y: &[T],
    tau: T,
    tab: &RosenbrockTableau<T>,
    df_dt: Option<&[T]>,
    linear: &LinearSettings<T>,
    work: &mut WorkCounters,
) -> Result<(Vec<T>, Vec<T>), StepError> {
    check_tau(tau)?;
    tab.validate()?;
    let n = y.len();
    let s = tab.stages;
    let jac = eval_jacobian(sys, t, y, work)?;
    let solver = LinearSolver::new(
        jac.shifted(T::one() / (tau * tab.gamma), -T::one())?,
        linear.tol,
        linear.max_iter,
    )?;
    let mut k: Vec<Vec<T>> = Vec::with_capacity(s);
    let mut f0: Option<Vec<T>> = None;
    for i in 0..s {
        let mut arg = y.to_vec();
        let mut shifted = false;
        for (j, kj) in k.iter().enumerate() {
            if tab.a[i][j] != T::zero() {
                axpy(tab.a[i][j], kj, &mut arg);
                shifted = true;
            }
        }
        let ti = t + tab.alpha[i] * tau;
        let mut rhs = if !shifted && tab.alpha[i] == T::zero() {
            match &f0 {
                Some(f) => f.clone(),
                None => {
                    let f = eval_rhs(sys, t, y, work)?;
                    f0 = Some(f.clone());
                    f
                }
            }
        } else {
            eval_rhs(sys, ti, &arg, work)?
        };
        for (j, kj) in k.iter().enumerate() {
            if tab.c[i][j] != T::zero() {
                axpy(-tab.c[i][j] / tau, kj, &mut rhs);
            }
        }
        if let Some(ft) = df_dt {
            axpy(tau * tab.gamma_i[i], ft, &mut rhs);
        }
        let ki = if norm_inf(&rhs) == T::zero() {
            vec![T::zero(); n]
        } else {
            linear_solve(&solver, &rhs, work)?
        };
        k.push(ki);
    }
    let mut y1 = y.to_vec();
    let mut y_hat = y.to_vec();
    for i in 0..s {
        axpy(tab.b[i], &k[i], &mut y1);
        axpy(tab.b_hat[i], &k[i], &mut y_hat);
    }
    Ok((y1, y_hat))
}

/// Result of one [`Stepper::step`].
#[derive(Clone, Debug)]
pub struct StepOutput<T> {
    pub y: Vec<T>,
    /// Lower-order companion solution, when the scheme has one.
    pub embedded: Option<Vec<T>>,
}

/// A scheme together with its solver settings.
#[derive(Clone, Debug)]
pub struct Stepper<T> {
    pub scheme: SchemeId,
    pub newton: NewtonSettings<T>,
    pub linear: LinearSettings<T>,
    pub krylov: KrylovOptions<T>,
    pub leja: LejaControl<T>,
}

impl<T: Real> Stepper<T> {
    pub fn new(scheme: SchemeId) -> Result<Self, StepError> {
        scheme.validate()?;
        Ok(Self {
            scheme,
            newton: NewtonSettings::default(),
            linear: LinearSettings::default(),
            krylov: KrylovOptions::default(),
            leja: LejaControl::default(),
        })
    }

    pub fn backend(&self, kind: PhiBackendKind) -> PhiBackend<T> {
        match kind {
            PhiBackendKind::Krylov => PhiBackend::Krylov(self.krylov),
            PhiBackendKind::Leja => PhiBackend::Leja(self.leja),
        }
    }

    pub fn step<S: OdeSystem<T> + ?Sized>(
        &self,
        sys: &S,
        t: T,
        y: &[T],
        tau: T,
        work: &mut WorkCounters,
    ) -> Result<StepOutput<T>, StepError> {
        let plain = |y| StepOutput { y, embedded: None };
        let out = match self.scheme {
            SchemeId::ThetaEuler(th) => plain(theta_euler_step(
                sys,
                t,
                y,
                tau,
                T::lit(th),
                &self.newton,
                &self.linear,
                work,
            )?),
            SchemeId::Erem(kind) => {
                let backend = self.backend(kind);
                match sys.time_derivative(t, y)? {
                    None => plain(erem_step_autonomous(sys, t, y, tau, &backend, work)?),
                    Some(ft) => {
                        work.rhs_evals += 2;
                        plain(erem_step_nonautonomous(sys, t, y, tau, &ft, &backend, work)?)
                    }
                }
            }
            SchemeId::Rosm(g) => {
                let ft = self.time_derivative(sys, t, y, work)?;
                plain(rosm_step(sys, t, y, tau, T::lit(g), ft.as_deref(), &self.linear, work)?)
            }
            SchemeId::Ros2 | SchemeId::Ros3p => {
                let tab = if self.scheme == SchemeId::Ros2 {
                    RosenbrockTableau::ros2()
                } else {
                    RosenbrockTableau::ros3p()
                };
                let ft = self.time_derivative(sys, t, y, work)?;
                let (y1, yh) =
                    rosenbrock_s_stage_step(sys, t, y, tau, &tab, ft.as_deref(), &self.linear, work)?;
                StepOutput {
                    y: y1,
                    embedded: Some(yh),
                }
            }
        };
        work.steps += 1;
        Ok(out)
    }

    fn time_derivative<S: OdeSystem<T> + ?Sized>(
        &self,
        sys: &S,
        t: T,
        y: &[T],
        work: &mut WorkCounters,
    ) -> Result<Option<Vec<T>>, StepError> {
        let ft = sys.time_derivative(t, y)?;
        if ft.is_some() {
            work.rhs_evals += 2;
        }
        Ok(ft)
    }
}
