//! The temperature and pressure sub-systems as ODE systems.

use expotherm_core::integrators::{ColoredJacobian, ModelError as OdeModelError, OdeSystem};
use expotherm_core::linalg::CsrMatrix;

use crate::tpfa::{Reservoir, VelocityField};

fn wrap<E: std::fmt::Display>(e: E) -> OdeModelError {
    OdeModelError(e.to_string())
}

/// `d(T_s, T_f)/dt = G(T, p)` with pressure and Darcy fluxes held fixed.
pub struct TemperatureSystem<'a> {
    pub res: &'a Reservoir,
    pub p: &'a [f64],
    pub vel: VelocityField,
    pub jac: &'a ColoredJacobian<f64>,
}

impl OdeSystem<f64> for TemperatureSystem<'_> {
    fn dim(&self) -> usize {
        2 * self.res.n_cells()
    }

    fn rhs(&self, _t: f64, y: &[f64], out: &mut [f64]) -> Result<(), OdeModelError> {
        let n = self.res.n_cells();
        let (ts, tf) = y.split_at(n);
        let (g1, g2) = out.split_at_mut(n);
        self.res
            .rhs_temperature(ts, tf, self.p, &self.vel, g1, g2)
            .map_err(wrap)
    }

    fn jacobian(&self, t: f64, y: &[f64]) -> Result<CsrMatrix<f64>, OdeModelError> {
        let mut f0 = vec![0.0; y.len()];
        self.rhs(t, y, &mut f0)?;
        self.jac.evaluate(|x, o| self.rhs(t, x, o), y, &f0)
    }

    fn is_autonomous(&self) -> bool {
        true
    }
}

/// `dp/dt = G₄(T, p)` with temperatures held fixed.
pub struct PressureSystem<'a> {
    pub res: &'a Reservoir,
    pub ts: &'a [f64],
    pub tf: &'a [f64],
    pub jac: &'a ColoredJacobian<f64>,
}

impl OdeSystem<f64> for PressureSystem<'_> {
    fn dim(&self) -> usize {
        self.res.n_cells()
    }

    fn rhs(&self, _t: f64, y: &[f64], out: &mut [f64]) -> Result<(), OdeModelError> {
        self.res.rhs_pressure(self.ts, self.tf, y, out).map_err(wrap)
    }

    fn jacobian(&self, t: f64, y: &[f64]) -> Result<CsrMatrix<f64>, OdeModelError> {
        let mut f0 = vec![0.0; y.len()];
        self.rhs(t, y, &mut f0)?;
        self.jac.evaluate(|x, o| self.rhs(t, x, o), y, &f0)
    }

    fn is_autonomous(&self) -> bool {
        true
    }
}
