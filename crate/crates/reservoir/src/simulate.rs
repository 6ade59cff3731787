//! Initial pressure and the sequential splitting loop.

use std::time::Instant;

use thiserror::Error;

use expotherm_core::integrators::{
    integrate_adaptive, NewtonSettings, LinearSettings, OdeSystem, StepController, StepError, Stepper,
    WorkCounters, SchemeId,
};
use expotherm_core::linalg::{CsrMatrix, LinearSolver};
use expotherm_core::phi::{KrylovOptions, LejaControl};

use crate::scenario::{ConfigError, DriverScheme, PressureInit, ScenarioConfig, SolverConfig, Splitting};
use crate::systems::{PressureSystem, TemperatureSystem};
use crate::tpfa::{Reservoir, StateFields};

#[derive(Debug, Error)]
pub enum SimError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("numerical failure at t = {t} s: {message}")]
    Numerical {
        t: f64,
        message: String,
        /// Last accepted state.
        state: Box<StateFields>,
    },
}

impl SimError {
    fn numerical(t: f64, message: impl Into<String>, state: &StateFields) -> Self {
        SimError::Numerical {
            t,
            message: message.into(),
            state: Box::new(state.clone()),
        }
    }
}

/// Steady pressure at the given fluid temperatures: the Darcy mass flux
/// divergence balances the well sources.
///
/// Without pressure wells the system is singular; the pressure is then fixed
/// at `pin = (cell, value)` and the sources are shifted by their mean so that
/// unbalanced rates still admit a steady solution. Upstream directions are
/// found by fixed-point iteration.
pub fn initial_pressure(res: &Reservoir, tf: &[f64], pin: Option<(usize, f64)>) -> Result<Vec<f64>, SimError> {
    let n = res.n_cells();
    let pinned = if res.has_pressure_wells() {
        None
    } else {
        match pin {
            Some((c, v)) if c < n => Some((c, v)),
            Some(_) => return Err(ConfigError::Invalid("pin cell outside the grid".into()).into()),
            None => {
                return Err(ConfigError::Invalid(
                    "steady pressure needs a pin or a pressure-controlled well".into(),
                )
                .into())
            }
        }
    };
    let start = pinned
        .map(|(_, v)| v)
        .or_else(|| (0..n).find_map(|c| res.fixed_pressure(c)))
        .unwrap_or(0.0);
    let mut p = vec![start; n];
    let up_signs = |p: &[f64]| -> Vec<bool> { res.darcy_velocity(tf, p).flux.iter().map(|&q| q >= 0.0).collect() };
    let mut signs = up_signs(&p);
    let zero_state = StateFields {
        ts: tf.to_vec(),
        tf: tf.to_vec(),
        p: p.clone(),
    };
    for _ in 0..50 {
        let (mut trip, mut b) = res.steady_mass_system(tf, &p);
        if pinned.is_some() {
            let mean = b.iter().sum::<f64>() / n as f64;
            b.iter_mut().for_each(|v| *v -= mean);
        }
        let mut diag = vec![0.0; n];
        for &(r, c, v) in &trip {
            if r == c {
                diag[r] += v;
            }
        }
        let held: Vec<Option<f64>> = (0..n)
            .map(|c| match pinned {
                Some((pc, v)) if pc == c => Some(v),
                _ => res.fixed_pressure(c),
            })
            .collect();
        trip.retain(|&(r, _, _)| held[r].is_none());
        for (c, h) in held.iter().enumerate() {
            if let Some(v) = h {
                let d = if diag[c] > 0.0 { diag[c] } else { 1.0 };
                trip.push((c, c, d));
                b[c] = d * v;
            }
        }
        let a = CsrMatrix::from_triplets(n, n, &trip)
            .map_err(|e| SimError::numerical(0.0, e.to_string(), &zero_state))?;
        let solver = LinearSolver::new(a, 1e-13, 20_000)
            .map_err(|e| SimError::numerical(0.0, format!("steady pressure: {e}"), &zero_state))?;
        let (x, _) = solver
            .solve(&b, &p)
            .map_err(|e| SimError::numerical(0.0, format!("steady pressure: {e}"), &zero_state))?;
        p = x;
        let new_signs = up_signs(&p);
        if new_signs == signs {
            return Ok(p);
        }
        signs = new_signs;
    }
    Ok(p)
}

/// Everything a run needs, resolved from a scenario.
#[derive(Clone, Debug)]
pub struct Prepared {
    pub reservoir: Reservoir,
    pub initial: StateFields,
    pub options: RunOptions,
}

#[derive(Clone, Debug)]
pub struct RunOptions {
    pub scheme: DriverScheme,
    pub splitting: Splitting,
    /// Splitting step in s.
    pub tau: f64,
    pub final_time: f64,
    pub adaptive: bool,
    pub solver: SolverConfig,
}

/// Builds the reservoir, the initial temperatures and the initial pressure;
/// porosity is referenced to the initial pressure.
pub fn prepare(cfg: &ScenarioConfig) -> Result<Prepared, SimError> {
    cfg.validate()?;
    let mut state = cfg.initial_temperatures()?;
    let res0 = cfg.reservoir(None)?;
    state.p = match cfg.initial.pressure {
        PressureInit::Uniform => vec![cfg.initial.pin_pressure_pa; res0.n_cells()],
        PressureInit::Steady => initial_pressure(&res0, &state.tf, Some((cfg.pin_cell()?, cfg.initial.pin_pressure_pa)))?,
    };
    let reservoir = cfg.reservoir(Some(&state.p))?;
    Ok(Prepared {
        reservoir,
        initial: state,
        options: RunOptions {
            scheme: cfg.scheme(),
            splitting: cfg.run.splitting,
            tau: cfg.time_step_s(),
            final_time: cfg.final_time_s(),
            adaptive: cfg.run.adaptive,
            solver: cfg.solver.clone(),
        },
    })
}

/// Diagnostics of one splitting step.
#[derive(Clone, Debug)]
pub struct StepLog {
    pub t: f64,
    pub tau: f64,
    pub temperature_work: WorkCounters,
    pub pressure_work: WorkCounters,
    /// Property evaluations clamped to the correlation ranges during the step.
    pub clamp_warnings: usize,
}

#[derive(Clone, Debug)]
pub struct RunResult {
    pub state: StateFields,
    pub log: Vec<StepLog>,
    pub temperature_work: WorkCounters,
    pub pressure_work: WorkCounters,
    /// Wall-clock seconds spent in the stepping loop.
    pub cpu_s: f64,
    pub clamp_warnings: usize,
}

impl RunResult {
    pub fn total_work(&self) -> WorkCounters {
        let mut w = self.temperature_work;
        w.merge(&self.pressure_work);
        w
    }
}

pub fn make_stepper(scheme: SchemeId, s: &SolverConfig) -> Result<Stepper<f64>, StepError> {
    let mut st = Stepper::new(scheme)?;
    st.newton = NewtonSettings {
        tol_a: s.tolerance,
        tol_r: s.tolerance,
        max_iter: s.newton_max_iterations,
    };
    st.linear = LinearSettings {
        tol: s.linear_tolerance,
        max_iter: s.linear_max_iterations,
    };
    st.krylov = KrylovOptions {
        dim: s.krylov_dimension,
        tol: s.tolerance,
    };
    st.leja = LejaControl {
        tol_a: s.tolerance,
        tol_r: s.tolerance,
        max_degree: s.leja_max_degree,
        ..LejaControl::default()
    };
    Ok(st)
}

fn retryable(e: &StepError) -> bool {
    matches!(
        e,
        StepError::Linalg(_) | StepError::NewtonDiverged { .. } | StepError::Phi(_) | StepError::Model(_)
    )
}

/// One step of length `tau`, split into halves on recoverable failures
/// down to `min_tau`.
fn substep<S: OdeSystem<f64>>(
    stepper: &Stepper<f64>,
    sys: &S,
    y: &[f64],
    tau: f64,
    min_tau: f64,
    work: &mut WorkCounters,
) -> Result<Vec<f64>, StepError> {
    let res = stepper.step(sys, 0.0, y, tau, work).and_then(|o| {
        if o.y.iter().all(|v| v.is_finite()) {
            Ok(o.y)
        } else {
            Err(StepError::Model(expotherm_core::integrators::ModelError(
                "non-finite solution".into(),
            )))
        }
    });
    match res {
        Ok(y) => Ok(y),
        Err(e) if retryable(&e) && 0.5 * tau >= min_tau => {
            work.rejected += 1;
            let mid = substep(stepper, sys, y, 0.5 * tau, min_tau, work)?;
            substep(stepper, sys, &mid, 0.5 * tau, min_tau, work)
        }
        Err(e) => Err(e),
    }
}

fn advance<S: OdeSystem<f64>>(
    stepper: &Stepper<f64>,
    sys: &S,
    y: &[f64],
    tau: f64,
    opts: &RunOptions,
    work: &mut WorkCounters,
) -> Result<Vec<f64>, StepError> {
    let min_tau = opts.solver.min_step_fraction * opts.tau;
    let embedded = matches!(stepper.scheme, SchemeId::Ros2 | SchemeId::Ros3p);
    if opts.adaptive && embedded {
        let tol = opts.solver.tolerance;
        let ctrl = StepController::new(tau, tol, tol);
        Ok(integrate_adaptive(stepper, sys, 0.0, y, tau, ctrl, work)?.y)
    } else {
        substep(stepper, sys, y, tau, min_tau, work)
    }
}

struct Split<'a> {
    res: &'a Reservoir,
    opts: &'a RunOptions,
    t_stepper: Stepper<f64>,
    p_stepper: Stepper<f64>,
    t_jac: expotherm_core::integrators::ColoredJacobian<f64>,
    p_jac: expotherm_core::integrators::ColoredJacobian<f64>,
}

impl Split<'_> {
    fn temperature(&self, st: &mut StateFields, tau: f64, work: &mut WorkCounters) -> Result<(), StepError> {
        let sys = TemperatureSystem {
            res: self.res,
            p: &st.p,
            vel: self.res.darcy_velocity(&st.tf, &st.p),
            jac: &self.t_jac,
        };
        let y = advance(&self.t_stepper, &sys, &st.temperatures(), tau, self.opts, work)?;
        st.set_temperatures(&y);
        Ok(())
    }

    fn pressure(&self, st: &mut StateFields, tau: f64, work: &mut WorkCounters) -> Result<(), StepError> {
        let sys = PressureSystem {
            res: self.res,
            ts: &st.ts,
            tf: &st.tf,
            jac: &self.p_jac,
        };
        let y = advance(&self.p_stepper, &sys, &st.p, tau, self.opts, work)?;
        st.p = y;
        Ok(())
    }
}

/// Sequential splitting: Trotter advances the temperatures with the pressure
/// frozen and then the pressure with the new temperatures; Strang wraps a
/// full pressure step between two temperature half steps. Darcy fluxes are
/// recomputed from the current state before every temperature advance.
pub fn run_simulation(res: &Reservoir, initial: &StateFields, opts: &RunOptions) -> Result<RunResult, SimError> {
    let mut res = res.clone();
    res.fluid = res.fluid.detached();
    let stepper = |s| make_stepper(s, &opts.solver).map_err(|e| SimError::numerical(0.0, e.to_string(), initial));
    let split = Split {
        res: &res,
        opts,
        t_stepper: stepper(opts.scheme.temperature)?,
        p_stepper: stepper(opts.scheme.pressure)?,
        t_jac: res.temperature_jacobian(),
        p_jac: res.pressure_jacobian(),
    };
    if !(opts.tau > 0.0 && opts.final_time > 0.0) {
        return Err(ConfigError::Invalid("time step and final time must be positive".into()).into());
    }
    let mut st = initial.clone();
    let mut log = Vec::new();
    let (mut wt, mut wp) = (WorkCounters::default(), WorkCounters::default());
    let mut t = 0.0;
    let eps = 1e-9 * opts.tau;
    let clock = Instant::now();
    while opts.final_time - t > eps {
        let h = opts.tau.min(opts.final_time - t);
        let before = res.fluid.warnings();
        let (mut dt, mut dp) = (WorkCounters::default(), WorkCounters::default());
        let mut next = st.clone();
        let outcome = match opts.splitting {
            Splitting::Trotter => split
                .temperature(&mut next, h, &mut dt)
                .and_then(|_| split.pressure(&mut next, h, &mut dp)),
            Splitting::Strang => split
                .temperature(&mut next, 0.5 * h, &mut dt)
                .and_then(|_| split.pressure(&mut next, h, &mut dp))
                .and_then(|_| split.temperature(&mut next, 0.5 * h, &mut dt)),
        };
        if let Err(e) = outcome {
            return Err(SimError::numerical(t, e.to_string(), &st));
        }
        st = next;
        t += h;
        wt.merge(&dt);
        wp.merge(&dp);
        log.push(StepLog {
            t,
            tau: h,
            temperature_work: dt,
            pressure_work: dp,
            clamp_warnings: res.fluid.warnings() - before,
        });
    }
    let cpu_s = clock.elapsed().as_secs_f64();
    Ok(RunResult {
        state: st,
        log,
        temperature_work: wt,
        pressure_work: wp,
        cpu_s,
        clamp_warnings: res.fluid.warnings(),
    })
}
