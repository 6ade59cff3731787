//! Water property correlations for low-enthalpy reservoirs (temperatures in °C).

use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Arc;

use thiserror::Error;

/// One Darcy in m².
pub const DARCY_M2: f64 = 9.869233e-13;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FluidError {
    #[error("temperature {t} °C outside [{lo}, {hi}] °C")]
    Temperature { t: f64, lo: f64, hi: f64 },
    #[error("porosity {phi} outside (0, 1) in cell {cell}")]
    Porosity { phi: f64, cell: usize },
    #[error("reference porosity {0} outside (0, 1)")]
    ReferencePorosity(f64),
}

const RHO_A: f64 = 3.9863;
const RHO_C: f64 = 508929.2;
const RHO_B: f64 = 288.9414;
const RHO_D: f64 = 68.12963;

/// Density in kg/m³.
pub fn water_density(t: f64) -> f64 {
    1000.0 * (1.0 - ((t - RHO_A).powi(2) / RHO_C) * ((t + RHO_B) / (t + RHO_D)))
}

/// `dρ/dT` in kg/(m³·°C).
pub fn water_density_derivative(t: f64) -> f64 {
    let a = (t - RHO_A).powi(2) / RHO_C;
    let da = 2.0 * (t - RHO_A) / RHO_C;
    let b = (t + RHO_B) / (t + RHO_D);
    let db = (RHO_D - RHO_B) / (t + RHO_D).powi(2);
    -1000.0 * (da * b + a * db)
}

/// Thermal expansivity `−ρ'/ρ` in 1/°C.
pub fn expansivity(t: f64) -> f64 {
    -water_density_derivative(t) / water_density(t)
}

/// Dynamic viscosity in kg/(m·s); branches meet at 40 and 100 °C.
pub fn water_viscosity(t: f64) -> Result<f64, FluidError> {
    if !(0.0..=300.0).contains(&t) {
        return Err(FluidError::Temperature {
            t,
            lo: 0.0,
            hi: 300.0,
        });
    }
    Ok(viscosity_unchecked(t))
}

fn viscosity_unchecked(t: f64) -> f64 {
    if t <= 40.0 {
        1.787e-3 * ((-0.03288 + 1.962e-4 * t) * t).exp()
    } else if t <= 100.0 {
        1e-3 * (1.0 + 0.015512 * (t - 20.0)).powf(-1.572)
    } else {
        0.2414 * 10f64.powf(247.8 / (t + 133.15)) * 1e-4
    }
}

/// Isobaric heat capacity in J/(kg·°C).
pub fn water_heat_capacity(t: f64) -> f64 {
    -1.3320081e-4 * t.powi(3) + 0.0328405 * t.powi(2) - 1.9254125 * t + 4206.3640128
}

/// `φ₀(1 + α_b(p − p₀))`.
pub fn porosity(phi0: f64, p: f64, p0: f64, alpha_b: f64) -> Result<f64, FluidError> {
    if !(phi0 > 0.0 && phi0 < 1.0) {
        return Err(FluidError::ReferencePorosity(phi0));
    }
    let phi = phi0 * (1.0 + alpha_b * (p - p0));
    if phi > 0.0 && phi < 1.0 {
        Ok(phi)
    } else {
        Err(FluidError::Porosity { phi, cell: usize::MAX })
    }
}

/// Fluid property model with optional constant overrides. Temperatures
/// outside the validity range of a correlation are clamped and counted.
#[derive(Clone, Debug)]
pub struct FluidModel {
    /// Compressibility in 1/Pa.
    pub beta_f: f64,
    /// Thermal conductivity in W/(m·K).
    pub k_f: f64,
    pub density_override: Option<f64>,
    pub heat_capacity_override: Option<f64>,
    pub viscosity_override: Option<f64>,
    pub expansivity_override: Option<f64>,
    warnings: Arc<AtomicUsize>,
}

impl Default for FluidModel {
    fn default() -> Self {
        Self {
            beta_f: 4.5e-10,
            k_f: 0.6,
            density_override: None,
            heat_capacity_override: None,
            viscosity_override: None,
            expansivity_override: None,
            warnings: Arc::new(AtomicUsize::new(0)),
        }
    }
}

impl FluidModel {
    fn clamp(&self, t: f64, lo: f64, hi: f64) -> f64 {
        if t < lo || t > hi || t.is_nan() {
            self.warnings.fetch_add(1, Ordering::Relaxed);
            if t.is_nan() {
                return lo;
            }
            return t.clamp(lo, hi);
        }
        t
    }

    pub fn density(&self, t: f64) -> f64 {
        self.density_override
            .unwrap_or_else(|| water_density(self.clamp(t, 0.0, 300.0)))
    }

    pub fn viscosity(&self, t: f64) -> f64 {
        self.viscosity_override
            .unwrap_or_else(|| viscosity_unchecked(self.clamp(t, 0.0, 300.0)))
    }

    pub fn heat_capacity(&self, t: f64) -> f64 {
        self.heat_capacity_override
            .unwrap_or_else(|| water_heat_capacity(self.clamp(t, 0.0, 100.0)))
    }

    pub fn expansivity(&self, t: f64) -> f64 {
        self.expansivity_override
            .unwrap_or_else(|| expansivity(self.clamp(t, 0.0, 300.0)))
    }

    /// Number of clamped property evaluations so far.
    pub fn warnings(&self) -> usize {
        self.warnings.load(Ordering::Relaxed)
    }

    pub fn reset_warnings(&self) {
        self.warnings.store(0, Ordering::Relaxed);
    }

    /// Copy with its own warning counter.
    pub fn detached(&self) -> Self {
        Self {
            warnings: Arc::new(AtomicUsize::new(0)),
            ..self.clone()
        }
    }
}
