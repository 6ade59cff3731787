//! Finite-volume right-hand sides for the rock/fluid temperatures and the pressure.

use thiserror::Error;

use expotherm_core::integrators::ColoredJacobian;
use expotherm_core::linalg::CsrMatrix;

use crate::fluid::{FluidError, FluidModel};
use crate::grid::{face_transmissibility, transmissibilities, GridError, StructuredGrid};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ModelError {
    #[error(transparent)]
    Fluid(#[from] FluidError),
    #[error(transparent)]
    Grid(#[from] GridError),
    #[error("vanishing heat capacity in cell {0}")]
    HeatCapacity(usize),
    #[error("vanishing storage coefficient in cell {0}")]
    Storage(usize),
    #[error("{0}")]
    Config(String),
}

/// Rock properties per cell (SI units).
#[derive(Clone, Debug)]
pub struct RockProps {
    /// Diagonal permeability in m².
    pub perm: Vec<[f64; 3]>,
    pub phi0: Vec<f64>,
    pub rho_s: Vec<f64>,
    pub c_s: Vec<f64>,
    pub k_s: Vec<f64>,
    /// Bulk compressibility in 1/Pa.
    pub alpha_b: Vec<f64>,
    /// Reference pressure of `phi0`, in Pa.
    pub p0: Vec<f64>,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum WellControl {
    /// Volumetric rate in m³/s, positive for injection, split evenly over the cells.
    Rate(f64),
    /// Cell pressure held at the given value in Pa.
    Pressure(f64),
}

#[derive(Clone, Debug, PartialEq)]
pub struct WellSpec {
    pub name: String,
    pub control: WellControl,
    pub cells: Vec<usize>,
    /// Temperature of injected water in °C.
    pub injection_temp: f64,
}

/// Per-cell temperatures (°C) and pressure (Pa).
#[derive(Clone, Debug, PartialEq)]
pub struct StateFields {
    pub ts: Vec<f64>,
    pub tf: Vec<f64>,
    pub p: Vec<f64>,
}

impl StateFields {
    /// `(T_s, T_f)` stacked.
    pub fn temperatures(&self) -> Vec<f64> {
        let mut v = self.ts.clone();
        v.extend_from_slice(&self.tf);
        v
    }

    pub fn set_temperatures(&mut self, t: &[f64]) {
        let n = self.ts.len();
        self.ts.copy_from_slice(&t[..n]);
        self.tf.copy_from_slice(&t[n..]);
    }
}

/// Volumetric flux per interior face in m³/s, positive from owner to neighbor.
#[derive(Clone, Debug, PartialEq)]
pub struct VelocityField {
    pub flux: Vec<f64>,
}

/// Reservoir model: grid, rock, fluid, wells and coupling parameters.
#[derive(Clone, Debug)]
pub struct Reservoir {
    pub grid: StructuredGrid,
    pub rock: RockProps,
    pub fluid: FluidModel,
    pub wells: Vec<WellSpec>,
    /// Rock–fluid heat exchange coefficient in W/(m³·K).
    pub he: f64,
    /// Gravity in m/s², third component along depth.
    pub gravity: [f64; 3],
    perm_trans: Vec<f64>,
    rate_sources: Vec<(usize, f64, f64)>,
    fixed: Vec<Option<(f64, f64)>>,
}

/// Cell quantities that depend on the state.
struct CellState {
    phi: Vec<f64>,
    rho: Vec<f64>,
    cp: Vec<f64>,
}

impl Reservoir {
    pub fn new(
        grid: StructuredGrid,
        rock: RockProps,
        fluid: FluidModel,
        wells: Vec<WellSpec>,
        he: f64,
        gravity: [f64; 3],
    ) -> Result<Self, ModelError> {
        let n = grid.n_cells();
        let lens = [
            rock.perm.len(),
            rock.phi0.len(),
            rock.rho_s.len(),
            rock.c_s.len(),
            rock.k_s.len(),
            rock.alpha_b.len(),
            rock.p0.len(),
        ];
        if let Some(&bad) = lens.iter().find(|&&l| l != n) {
            return Err(GridError::Length {
                expected: n,
                found: bad,
            }
            .into());
        }
        for (c, &phi) in rock.phi0.iter().enumerate() {
            if !(phi > 0.0 && phi < 1.0) {
                return Err(FluidError::Porosity { phi, cell: c }.into());
            }
        }
        if !(he >= 0.0) {
            return Err(ModelError::Config("heat exchange coefficient must be >= 0".into()));
        }
        let perm_trans = transmissibilities(&grid, &rock.perm)?;
        let mut rate_sources = Vec::new();
        let mut fixed = vec![None; n];
        for w in &wells {
            if w.cells.is_empty() || w.cells.iter().any(|&c| c >= n) {
                return Err(ModelError::Config(format!("well {} has invalid cells", w.name)));
            }
            match w.control {
                WellControl::Rate(q) => {
                    if q == 0.0 || !q.is_finite() {
                        return Err(ModelError::Config(format!("well {} needs a nonzero rate", w.name)));
                    }
                    let per = q / w.cells.len() as f64;
                    for &c in &w.cells {
                        rate_sources.push((c, per, w.injection_temp));
                    }
                }
                WellControl::Pressure(p) => {
                    for &c in &w.cells {
                        fixed[c] = Some((p, w.injection_temp));
                    }
                }
            }
        }
        Ok(Self {
            grid,
            rock,
            fluid,
            wells,
            he,
            gravity,
            perm_trans,
            rate_sources,
            fixed,
        })
    }

    pub fn n_cells(&self) -> usize {
        self.grid.n_cells()
    }

    /// Cells whose pressure is held by a well, with the held value.
    pub fn fixed_pressure(&self, c: usize) -> Option<f64> {
        self.fixed[c].map(|(p, _)| p)
    }

    pub fn has_pressure_wells(&self) -> bool {
        self.fixed.iter().any(Option::is_some)
    }

    /// Rate-controlled sources as `(cell, m³/s, injection °C)`.
    pub fn rate_sources(&self) -> &[(usize, f64, f64)] {
        &self.rate_sources
    }

    pub fn porosity(&self, p: &[f64]) -> Result<Vec<f64>, ModelError> {
        p.iter()
            .enumerate()
            .map(|(c, &pc)| {
                let phi = self.rock.phi0[c] * (1.0 + self.rock.alpha_b[c] * (pc - self.rock.p0[c]));
                if phi > 0.0 && phi < 1.0 && phi.is_finite() {
                    Ok(phi)
                } else {
                    Err(FluidError::Porosity { phi, cell: c }.into())
                }
            })
            .collect()
    }

    fn cell_state(&self, tf: &[f64], p: &[f64]) -> Result<CellState, ModelError> {
        Ok(CellState {
            phi: self.porosity(p)?,
            rho: tf.iter().map(|&t| self.fluid.density(t)).collect(),
            cp: tf.iter().map(|&t| self.fluid.heat_capacity(t)).collect(),
        })
    }

    /// Geometric gravity term `g · (x_j − x_i)` across a face.
    fn gravity_drop(&self, axis: usize) -> f64 {
        let h = [self.grid.dx, self.grid.dy, self.grid.dz][axis];
        self.gravity[axis] * h
    }

    /// Darcy fluxes `λ_up ((p_i − p_j) + ρ̄ g·(x_j − x_i))` with the viscosity of the
    /// upstream cell and the arithmetic mean density in the gravity term.
    pub fn darcy_velocity(&self, tf: &[f64], p: &[f64]) -> VelocityField {
        let faces = self.grid.faces();
        let mut flux = Vec::with_capacity(faces.len());
        for (f, &tk) in faces.iter().zip(&self.perm_trans) {
            let (i, j) = (f.owner, f.neighbor);
            let rho_face = 0.5 * (self.fluid.density(tf[i]) + self.fluid.density(tf[j]));
            let pot = (p[i] - p[j]) + rho_face * self.gravity_drop(f.axis);
            let up = if pot >= 0.0 { i } else { j };
            flux.push(tk / self.fluid.viscosity(tf[up]) * pot);
        }
        VelocityField { flux }
    }

    /// `(G₁, G₂)`: time derivatives of rock and fluid temperatures for a given
    /// pressure (through porosity) and frozen Darcy fluxes.
    pub fn rhs_temperature(
        &self,
        ts: &[f64],
        tf: &[f64],
        p: &[f64],
        vel: &VelocityField,
        g1: &mut [f64],
        g2: &mut [f64],
    ) -> Result<(), ModelError> {
        let st = self.cell_state(tf, p)?;
        self.heat_balance(ts, tf, &st, vel, g1, g2)?;
        let vol = self.grid.cell_volume();
        for c in 0..self.n_cells() {
            let cap_s = (1.0 - st.phi[c]) * self.rock.rho_s[c] * self.rock.c_s[c] * vol;
            let cap_f = st.phi[c] * st.rho[c] * st.cp[c] * vol;
            if !(cap_s > 0.0 && cap_f > 0.0) {
                return Err(ModelError::HeatCapacity(c));
            }
            g1[c] /= cap_s;
            g2[c] /= cap_f;
        }
        Ok(())
    }

    /// Heat rates (W) per cell before division by the heat capacities.
    fn heat_balance(
        &self,
        ts: &[f64],
        tf: &[f64],
        st: &CellState,
        vel: &VelocityField,
        q_s: &mut [f64],
        q_f: &mut [f64],
    ) -> Result<(), ModelError> {
        let n = self.n_cells();
        let vol = self.grid.cell_volume();
        for c in 0..n {
            let ex = self.he * vol * (tf[c] - ts[c]);
            q_s[c] = ex;
            q_f[c] = -ex;
        }
        let kf = self.fluid.k_f;
        let mut well_supply = vec![0.0; n];
        for (f, &q) in self.grid.faces().iter().zip(&vel.flux) {
            let (i, j) = (f.owner, f.neighbor);
            let ks_i = (1.0 - st.phi[i]) * self.rock.k_s[i];
            let ks_j = (1.0 - st.phi[j]) * self.rock.k_s[j];
            let t_s = face_transmissibility(f.area, ks_i, f.d_owner, ks_j, f.d_neighbor);
            let t_f = face_transmissibility(f.area, st.phi[i] * kf, f.d_owner, st.phi[j] * kf, f.d_neighbor);
            let cond_s = t_s * (ts[i] - ts[j]);
            let up = if q >= 0.0 { i } else { j };
            let adv = q * st.rho[up] * st.cp[up] * tf[up];
            let flow_f = t_f * (tf[i] - tf[j]) + adv;
            q_s[i] -= cond_s;
            q_s[j] += cond_s;
            q_f[i] -= flow_f;
            q_f[j] += flow_f;
            if self.fixed[i].is_some() {
                well_supply[i] += q;
            }
            if self.fixed[j].is_some() {
                well_supply[j] -= q;
            }
        }
        for &(c, q, t_inj) in &self.rate_sources {
            q_f[c] += self.enthalpy_source(c, q, t_inj, tf, st);
        }
        for c in 0..n {
            if let Some((_, t_inj)) = self.fixed[c] {
                q_f[c] += self.enthalpy_source(c, well_supply[c], t_inj, tf, st);
            }
        }
        Ok(())
    }

    fn enthalpy_source(&self, c: usize, q: f64, t_inj: f64, tf: &[f64], st: &CellState) -> f64 {
        if q > 0.0 {
            q * self.fluid.density(t_inj) * self.fluid.heat_capacity(t_inj) * t_inj
        } else {
            q * st.rho[c] * st.cp[c] * tf[c]
        }
    }

    /// Mass rates (kg/s) per cell: sources minus outgoing Darcy mass fluxes.
    fn mass_balance(&self, tf: &[f64], st: &CellState, vel: &VelocityField, out: &mut [f64]) {
        out.iter_mut().for_each(|v| *v = 0.0);
        for (f, &q) in self.grid.faces().iter().zip(&vel.flux) {
            let up = if q >= 0.0 { f.owner } else { f.neighbor };
            let m = q * st.rho[up];
            out[f.owner] -= m;
            out[f.neighbor] += m;
        }
        for &(c, q, t_inj) in &self.rate_sources {
            let rho = if q > 0.0 { self.fluid.density(t_inj) } else { self.fluid.density(tf[c]) };
            out[c] += rho * q;
        }
    }

    /// `G₄ = G₃ + φα_f/(φβ_f + φ₀α_b) G₂`, with `G₃` the mass balance divided by
    /// `ρ_f(φβ_f + φ₀α_b)`. Cells held by pressure wells have zero rate.
    pub fn rhs_pressure(&self, ts: &[f64], tf: &[f64], p: &[f64], out: &mut [f64]) -> Result<(), ModelError> {
        let n = self.n_cells();
        let st = self.cell_state(tf, p)?;
        let vel = self.darcy_velocity(tf, p);
        let mut g1 = vec![0.0; n];
        let mut g2 = vec![0.0; n];
        self.rhs_temperature(ts, tf, p, &vel, &mut g1, &mut g2)?;
        self.mass_balance(tf, &st, &vel, out);
        let vol = self.grid.cell_volume();
        for c in 0..n {
            if self.fixed[c].is_some() {
                out[c] = 0.0;
                continue;
            }
            let storage = st.phi[c] * self.fluid.beta_f + self.rock.phi0[c] * self.rock.alpha_b[c];
            if !(storage > 0.0) {
                return Err(ModelError::Storage(c));
            }
            let g3 = out[c] / (st.rho[c] * storage * vol);
            out[c] = g3 + st.phi[c] * self.fluid.expansivity(tf[c]) / storage * g2[c];
        }
        Ok(())
    }

    /// Total heat content `Σ|Ωᵢ|[(1−φ)ρ_s c_s T_s + φρ_f c_f T_f]` in J.
    pub fn heat_content(&self, ts: &[f64], tf: &[f64], p: &[f64]) -> Result<f64, ModelError> {
        let st = self.cell_state(tf, p)?;
        let vol = self.grid.cell_volume();
        Ok((0..self.n_cells())
            .map(|c| {
                vol * ((1.0 - st.phi[c]) * self.rock.rho_s[c] * self.rock.c_s[c] * ts[c]
                    + st.phi[c] * st.rho[c] * st.cp[c] * tf[c])
            })
            .sum())
    }

    /// Storage-weighted sums `(Σ heat rate, Σ heat magnitude)` of a temperature
    /// right-hand side; the first vanishes for a closed, source-free domain.
    pub fn heat_rate_sum(&self, tf: &[f64], p: &[f64], g1: &[f64], g2: &[f64]) -> Result<(f64, f64), ModelError> {
        let st = self.cell_state(tf, p)?;
        let vol = self.grid.cell_volume();
        let mut sum = 0.0;
        let mut mag = 0.0;
        for c in 0..self.n_cells() {
            let a = vol * (1.0 - st.phi[c]) * self.rock.rho_s[c] * self.rock.c_s[c] * g1[c];
            let b = vol * st.phi[c] * st.rho[c] * st.cp[c] * g2[c];
            sum += a + b;
            mag += a.abs() + b.abs();
        }
        Ok((sum, mag))
    }

    /// Storage-weighted sum of the mass part `G₃` of a pressure right-hand side,
    /// and the sum of magnitudes.
    pub fn mass_rate_sum(&self, tf: &[f64], p: &[f64]) -> Result<(f64, f64), ModelError> {
        let st = self.cell_state(tf, p)?;
        let vel = self.darcy_velocity(tf, p);
        let mut m = vec![0.0; self.n_cells()];
        self.mass_balance(tf, &st, &vel, &mut m);
        Ok((m.iter().sum(), m.iter().map(|v| v.abs()).sum()))
    }

    /// Steady mass balance linearized around the upstream choices of `p_guess`:
    /// triplets of `A` and right-hand side `b` with `(A p)ᵢ` the outgoing Darcy
    /// mass flux of cell `i` and `bᵢ` its rate-well mass source minus the
    /// gravity part of the outgoing flux.
    pub fn steady_mass_system(&self, tf: &[f64], p_guess: &[f64]) -> (Vec<(usize, usize, f64)>, Vec<f64>) {
        let n = self.n_cells();
        let mut trip = Vec::with_capacity(4 * self.grid.faces().len() + n);
        let mut b = vec![0.0; n];
        for c in 0..n {
            trip.push((c, c, 0.0));
        }
        for (f, &tk) in self.grid.faces().iter().zip(&self.perm_trans) {
            let (i, j) = (f.owner, f.neighbor);
            let rho_face = 0.5 * (self.fluid.density(tf[i]) + self.fluid.density(tf[j]));
            let grav = rho_face * self.gravity_drop(f.axis);
            let up = if (p_guess[i] - p_guess[j]) + grav >= 0.0 { i } else { j };
            let a = self.fluid.density(tf[up]) * tk / self.fluid.viscosity(tf[up]);
            trip.extend([(i, i, a), (i, j, -a), (j, j, a), (j, i, -a)]);
            b[i] -= a * grav;
            b[j] += a * grav;
        }
        for &(c, q, t_inj) in &self.rate_sources {
            let rho = if q > 0.0 { self.fluid.density(t_inj) } else { self.fluid.density(tf[c]) };
            b[c] += rho * q;
        }
        (trip, b)
    }

    /// Sparsity of the pressure Jacobian (grid adjacency).
    pub fn pressure_pattern(&self) -> CsrMatrix<f64> {
        let adj = self.grid.adjacency();
        let mut t = Vec::new();
        for (r, cols) in adj.iter().enumerate() {
            for &c in cols {
                t.push((r, c, 1.0));
            }
        }
        CsrMatrix::from_triplets(self.n_cells(), self.n_cells(), &t).expect("valid adjacency")
    }

    /// Sparsity of the `(T_s, T_f)` Jacobian: the grid stencil in both blocks plus
    /// the per-cell exchange coupling.
    pub fn temperature_pattern(&self) -> CsrMatrix<f64> {
        let n = self.n_cells();
        let adj = self.grid.adjacency();
        let mut t = Vec::new();
        for (r, cols) in adj.iter().enumerate() {
            for &c in cols {
                t.push((r, c, 1.0));
                t.push((n + r, n + c, 1.0));
            }
            t.push((r, n + r, 1.0));
            t.push((n + r, r, 1.0));
        }
        CsrMatrix::from_triplets(2 * n, 2 * n, &t).expect("valid adjacency")
    }

    pub fn temperature_jacobian(&self) -> ColoredJacobian<f64> {
        ColoredJacobian::new(self.temperature_pattern())
    }

    pub fn pressure_jacobian(&self) -> ColoredJacobian<f64> {
        ColoredJacobian::new(self.pressure_pattern())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn uniform(n: usize, nx: usize) -> Reservoir {
        let grid = StructuredGrid::new(nx, 1, n / nx, 10.0, 10.0, 10.0).unwrap();
        let rock = RockProps {
            perm: vec![[1e-13; 3]; n],
            phi0: vec![0.2; n],
            rho_s: vec![2800.0; n],
            c_s: vec![850.0; n],
            k_s: vec![2.0; n],
            alpha_b: vec![1e-7; n],
            p0: vec![1e7; n],
        };
        Reservoir::new(grid, rock, FluidModel::default(), vec![], 10.0, [0.0; 3]).unwrap()
    }

    #[test]
    fn equilibrium_has_zero_rates() {
        let r = uniform(4, 4);
        let t = vec![50.0; 4];
        let p = vec![1e7; 4];
        let vel = r.darcy_velocity(&t, &p);
        assert!(vel.flux.iter().all(|&q| q == 0.0));
        let (mut g1, mut g2) = (vec![1.0; 4], vec![1.0; 4]);
        r.rhs_temperature(&t, &t, &p, &vel, &mut g1, &mut g2).unwrap();
        assert!(g1.iter().chain(&g2).all(|&v| v == 0.0));
        let mut dp = vec![1.0; 4];
        r.rhs_pressure(&t, &t, &p, &mut dp).unwrap();
        assert!(dp.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn exchange_sign() {
        let r = uniform(2, 2);
        let p = vec![1e7; 2];
        let vel = r.darcy_velocity(&[40.0; 2], &p);
        let (mut g1, mut g2) = (vec![0.0; 2], vec![0.0; 2]);
        r.rhs_temperature(&[30.0, 30.0], &[40.0, 40.0], &p, &vel, &mut g1, &mut g2).unwrap();
        assert!(g1.iter().all(|&v| v > 0.0));
        assert!(g2.iter().all(|&v| v < 0.0));
    }

    #[test]
    fn upwind_takes_donor_value() {
        let mut r = uniform(2, 2);
        r.he = 0.0;
        r.fluid.k_f = 0.0;
        let p = vec![1e7, 1e7];
        let vel = VelocityField { flux: vec![1e-3] };
        let tf = [10.0, 60.0];
        let (mut g1, mut g2) = (vec![0.0; 2], vec![0.0; 2]);
        r.rhs_temperature(&[10.0, 60.0], &tf, &p, &vel, &mut g1, &mut g2).unwrap();
        let fl = FluidModel::default();
        let x_donor = fl.density(10.0) * fl.heat_capacity(10.0) * 10.0;
        let cap = 0.2 * fl.density(60.0) * fl.heat_capacity(60.0) * 1000.0;
        assert!((g2[1] - 1e-3 * x_donor / cap).abs() < 1e-12 * g2[1].abs());
    }
}
