//! Scenario files: grid, rock layers, fluid, wells, initial state and run settings.
//!
//! Every physical quantity carries its unit in the key name.

use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use expotherm_core::integrators::{PhiBackendKind, SchemeId};

use crate::fluid::{FluidModel, DARCY_M2};
use crate::grid::StructuredGrid;
use crate::tpfa::{ModelError, Reservoir, RockProps, StateFields, WellControl, WellSpec};

const DAY_S: f64 = 86_400.0;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("malformed scenario: {0}")]
    Parse(#[from] toml::de::Error),
    #[error("invalid scenario: {0}")]
    Invalid(String),
    #[error(transparent)]
    Model(#[from] ModelError),
}

fn invalid<T>(msg: impl Into<String>) -> Result<T, ConfigError> {
    Err(ConfigError::Invalid(msg.into()))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    pub nx: usize,
    pub ny: usize,
    pub nz: usize,
    pub length_x_m: f64,
    pub length_y_m: f64,
    /// Thickness; the third coordinate is depth below the top.
    pub length_z_m: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LayerConfig {
    pub top_depth_m: f64,
    pub bottom_depth_m: f64,
    pub permeability_darcy: f64,
    pub porosity: f64,
    pub rock_density_kg_per_m3: f64,
    pub rock_heat_capacity_j_per_kg_k: f64,
    pub rock_conductivity_w_per_m_k: f64,
    pub bulk_compressibility_per_pa: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RockConfig {
    pub layers: Vec<LayerConfig>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FluidConfig {
    pub compressibility_per_pa: f64,
    pub conductivity_w_per_m_k: f64,
    pub density_kg_per_m3: Option<f64>,
    pub heat_capacity_j_per_kg_k: Option<f64>,
    pub viscosity_pa_s: Option<f64>,
    pub expansivity_per_c: Option<f64>,
}

impl Default for FluidConfig {
    fn default() -> Self {
        let f = FluidModel::default();
        Self {
            compressibility_per_pa: f.beta_f,
            conductivity_w_per_m_k: f.k_f,
            density_kg_per_m3: None,
            heat_capacity_j_per_kg_k: None,
            viscosity_pa_s: None,
            expansivity_per_c: None,
        }
    }
}

/// A well is either a vertical column `[i, j]` through all layers or a list
/// of `[i, j, k]` cells; exactly one of the two controls must be given.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WellConfig {
    pub name: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub column: Option<[usize; 2]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cells: Option<Vec<[usize; 3]>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rate_m3_per_s: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pressure_pa: Option<f64>,
    #[serde(default = "default_injection_temp")]
    pub injection_temperature_c: f64,
}

fn default_injection_temp() -> f64 {
    10.0
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PhysicsConfig {
    pub heat_exchange_w_per_m3_k: f64,
    pub gravity: bool,
    /// Components along x, y and depth.
    pub gravity_m_per_s2: [f64; 3],
}

impl Default for PhysicsConfig {
    fn default() -> Self {
        Self {
            heat_exchange_w_per_m3_k: 1e4,
            gravity: true,
            gravity_m_per_s2: [0.0, 0.0, 9.81],
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PressureInit {
    /// Steady mass balance at the initial temperatures.
    Steady,
    Uniform,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct InitialConfig {
    pub temperature_top_c: f64,
    pub gradient_c_per_m: f64,
    pub pressure: PressureInit,
    /// Pressure at `pin_cell` (steady mode) or everywhere (uniform mode).
    pub pin_pressure_pa: f64,
    pub pin_cell: [usize; 3],
}

impl Default for InitialConfig {
    fn default() -> Self {
        Self {
            temperature_top_c: 60.0,
            gradient_c_per_m: 0.3,
            pressure: PressureInit::Steady,
            pin_pressure_pa: 1e5,
            pin_cell: [0, 0, 0],
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Splitting {
    Trotter,
    Strang,
}

impl fmt::Display for Splitting {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Splitting::Trotter => "trotter",
            Splitting::Strang => "strang",
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub final_time_days: f64,
    pub scheme: String,
    #[serde(default = "default_splitting")]
    pub splitting: Splitting,
    pub time_step_days: f64,
    /// Error-controlled sub-stepping inside each splitting step, for schemes
    /// with an embedded solution.
    #[serde(default)]
    pub adaptive: bool,
}

fn default_splitting() -> Splitting {
    Splitting::Trotter
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SolverConfig {
    /// Tolerance of the φ evaluations, the Newton iteration and adaptive stepping.
    pub tolerance: f64,
    pub linear_tolerance: f64,
    pub linear_max_iterations: usize,
    pub newton_max_iterations: usize,
    pub krylov_dimension: usize,
    pub leja_max_degree: usize,
    /// Smallest sub-step, as a fraction of the splitting step, before a run aborts.
    pub min_step_fraction: f64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            tolerance: 1e-6,
            linear_tolerance: 1e-10,
            linear_max_iterations: 1000,
            newton_max_iterations: 25,
            krylov_dimension: 10,
            leja_max_degree: 120,
            min_step_fraction: 1.0 / 1024.0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub grid: GridConfig,
    pub rock: RockConfig,
    #[serde(default)]
    pub fluid: FluidConfig,
    #[serde(default)]
    pub wells: Vec<WellConfig>,
    #[serde(default)]
    pub physics: PhysicsConfig,
    #[serde(default)]
    pub initial: InitialConfig,
    pub run: RunConfig,
    #[serde(default)]
    pub solver: SolverConfig,
}

/// A scheme label together with the schemes used for the temperature and
/// the pressure systems.
#[derive(Clone, Debug, PartialEq)]
pub struct DriverScheme {
    pub label: String,
    pub temperature: SchemeId,
    pub pressure: SchemeId,
}

impl DriverScheme {
    /// Accepts `Implicittheta=1`, `Implicittheta=0.5`, `EREMKrylov`, `EREMLeja`,
    /// `EREMKLeja` (Leja for temperature, Krylov for pressure), `ROSM(1)`,
    /// `ROSM(1/2)`, `ROS2` and `ROS3p`, case-insensitively.
    pub fn parse(label: &str) -> Result<Self, ConfigError> {
        let key: String = label
            .chars()
            .filter(|c| !c.is_whitespace())
            .collect::<String>()
            .to_ascii_lowercase();
        let same = |s: SchemeId| (s, s);
        let (temperature, pressure) = match key.as_str() {
            "implicittheta=1" | "theta=1" => same(SchemeId::ThetaEuler(1.0)),
            "implicittheta=0.5" | "implicittheta=1/2" | "theta=0.5" | "theta=1/2" => {
                same(SchemeId::ThetaEuler(0.5))
            }
            "implicittheta=0" | "theta=0" => same(SchemeId::ThetaEuler(0.0)),
            "eremkrylov" | "erem" => same(SchemeId::Erem(PhiBackendKind::Krylov)),
            "eremleja" => same(SchemeId::Erem(PhiBackendKind::Leja)),
            "eremkleja" => (
                SchemeId::Erem(PhiBackendKind::Leja),
                SchemeId::Erem(PhiBackendKind::Krylov),
            ),
            "rosm(1)" => same(SchemeId::Rosm(1.0)),
            "rosm(1/2)" | "rosm(0.5)" => same(SchemeId::Rosm(0.5)),
            "ros2" | "ros2(1)" => same(SchemeId::Ros2),
            "ros3p" => same(SchemeId::Ros3p),
            _ => return invalid(format!("unknown scheme label {label:?}")),
        };
        Ok(Self {
            label: label.trim().to_string(),
            temperature,
            pressure,
        })
    }

    /// Lowest classical order of the two schemes.
    pub fn order(&self) -> u32 {
        self.temperature.order().min(self.pressure.order())
    }
}

impl ScenarioConfig {
    pub fn from_toml_str(s: &str) -> Result<Self, ConfigError> {
        let cfg: Self = toml::from_str(s)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_file(path: &Path) -> Result<Self, ConfigError> {
        let s = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::from_toml_str(&s)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("scenario serializes")
    }

    /// The two-layer reservoir on a 20×20×4 grid: injector column at `(1, 1)` km,
    /// producer column at the origin, 40 days.
    pub fn desk() -> Self {
        Self::two_layer(20, 20, 4)
    }

    /// Two-layer reservoir on an `nx × ny × nz` grid. Well rates of 1.04 and
    /// −0.104 m³/s belong to a 50×50×50 grid and are scaled by the cell-count ratio.
    pub fn two_layer(nx: usize, ny: usize, nz: usize) -> Self {
        let scale = (nx * ny * nz) as f64 / 125_000.0;
        let layer = |top: f64, bottom: f64, k: f64, phi: f64, rho: f64, c: f64, ks: f64| LayerConfig {
            top_depth_m: top,
            bottom_depth_m: bottom,
            permeability_darcy: k,
            porosity: phi,
            rock_density_kg_per_m3: rho,
            rock_heat_capacity_j_per_kg_k: c,
            rock_conductivity_w_per_m_k: ks,
            bulk_compressibility_per_pa: 1e-7,
        };
        Self {
            grid: GridConfig {
                nx,
                ny,
                nz,
                length_x_m: 1000.0,
                length_y_m: 1000.0,
                length_z_m: 100.0,
            },
            rock: RockConfig {
                layers: vec![
                    layer(0.0, 50.0, 1e-2, 0.2, 2800.0, 850.0, 2.0),
                    layer(50.0, 100.0, 1e-1, 0.4, 3000.0, 1000.0, 3.0),
                ],
            },
            fluid: FluidConfig::default(),
            wells: vec![
                WellConfig {
                    name: "injector".into(),
                    column: Some([nx - 1, ny - 1]),
                    cells: None,
                    rate_m3_per_s: Some(1.04 * scale),
                    pressure_pa: None,
                    injection_temperature_c: 10.0,
                },
                WellConfig {
                    name: "producer".into(),
                    column: Some([0, 0]),
                    cells: None,
                    rate_m3_per_s: Some(-0.104 * scale),
                    pressure_pa: None,
                    injection_temperature_c: 10.0,
                },
            ],
            physics: PhysicsConfig::default(),
            initial: InitialConfig::default(),
            run: RunConfig {
                final_time_days: 40.0,
                scheme: "ROS2".into(),
                splitting: Splitting::Trotter,
                time_step_days: 5.0,
                adaptive: false,
            },
            solver: SolverConfig::default(),
        }
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let g = &self.grid;
        if g.nx == 0 || g.ny == 0 || g.nz == 0 {
            return invalid("grid needs at least one cell per direction");
        }
        if !(g.length_x_m > 0.0 && g.length_y_m > 0.0 && g.length_z_m > 0.0) {
            return invalid("grid lengths must be positive");
        }
        if !(self.run.final_time_days > 0.0) {
            return invalid("final time must be positive");
        }
        if !(self.run.time_step_days > 0.0) {
            return invalid("time step must be positive");
        }
        DriverScheme::parse(&self.run.scheme)?;
        let s = &self.solver;
        if !(s.tolerance > 0.0 && s.linear_tolerance > 0.0) {
            return invalid("solver tolerances must be positive");
        }
        if s.krylov_dimension == 0 || s.linear_max_iterations == 0 || s.newton_max_iterations == 0 {
            return invalid("solver iteration limits must be positive");
        }
        if !(s.min_step_fraction > 0.0 && s.min_step_fraction <= 1.0) {
            return invalid("min_step_fraction must lie in (0, 1]");
        }
        for l in &self.rock.layers {
            if !(l.permeability_darcy > 0.0
                && l.porosity > 0.0
                && l.porosity < 1.0
                && l.rock_density_kg_per_m3 > 0.0
                && l.rock_heat_capacity_j_per_kg_k > 0.0
                && l.rock_conductivity_w_per_m_k > 0.0
                && l.bulk_compressibility_per_pa >= 0.0)
            {
                return invalid(format!(
                    "layer {}–{} m has out-of-range properties",
                    l.top_depth_m, l.bottom_depth_m
                ));
            }
        }
        for w in &self.wells {
            if w.column.is_some() == w.cells.is_some() {
                return invalid(format!("well {} needs exactly one of column or cells", w.name));
            }
            if w.rate_m3_per_s.is_some() == w.pressure_pa.is_some() {
                return invalid(format!(
                    "well {} needs exactly one of rate_m3_per_s or pressure_pa",
                    w.name
                ));
            }
        }
        self.grid()?;
        self.layer_of_cells()?;
        self.wells()?;
        Ok(())
    }

    pub fn grid(&self) -> Result<StructuredGrid, ConfigError> {
        let g = &self.grid;
        StructuredGrid::from_extent(g.nx, g.ny, g.nz, g.length_x_m, g.length_y_m, g.length_z_m)
            .map_err(|e| ConfigError::Model(e.into()))
    }

    pub fn scheme(&self) -> DriverScheme {
        DriverScheme::parse(&self.run.scheme).expect("validated")
    }

    pub fn final_time_s(&self) -> f64 {
        self.run.final_time_days * DAY_S
    }

    pub fn time_step_s(&self) -> f64 {
        self.run.time_step_days * DAY_S
    }

    /// Layer index per cell; each cell centre must fall in exactly one layer.
    fn layer_of_cells(&self) -> Result<Vec<usize>, ConfigError> {
        let grid = self.grid()?;
        (0..grid.n_cells())
            .map(|c| {
                let z = grid.center(c)[2];
                let hits: Vec<usize> = self
                    .rock
                    .layers
                    .iter()
                    .enumerate()
                    .filter(|(_, l)| l.top_depth_m <= z && z < l.bottom_depth_m)
                    .map(|(i, _)| i)
                    .collect();
                match hits.as_slice() {
                    [one] => Ok(*one),
                    [] => invalid(format!("no rock layer covers depth {z} m")),
                    _ => invalid(format!("rock layers overlap at depth {z} m")),
                }
            })
            .collect()
    }

    fn wells(&self) -> Result<Vec<WellSpec>, ConfigError> {
        let g = &self.grid;
        let idx = |[i, j, k]: [usize; 3]| -> Result<usize, ConfigError> {
            if i < g.nx && j < g.ny && k < g.nz {
                Ok(i + g.nx * (j + g.ny * k))
            } else {
                invalid(format!("cell [{i}, {j}, {k}] outside the grid"))
            }
        };
        self.wells
            .iter()
            .map(|w| {
                let cells = match (&w.column, &w.cells) {
                    (Some([i, j]), None) => (0..g.nz).map(|k| idx([*i, *j, k])).collect::<Result<Vec<_>, _>>()?,
                    (None, Some(list)) => list.iter().map(|&c| idx(c)).collect::<Result<Vec<_>, _>>()?,
                    _ => return invalid(format!("well {} needs exactly one of column or cells", w.name)),
                };
                let control = match (w.rate_m3_per_s, w.pressure_pa) {
                    (Some(q), None) => WellControl::Rate(q),
                    (None, Some(p)) => WellControl::Pressure(p),
                    _ => return invalid(format!("well {} needs exactly one control", w.name)),
                };
                Ok(WellSpec {
                    name: w.name.clone(),
                    control,
                    cells,
                    injection_temp: w.injection_temperature_c,
                })
            })
            .collect()
    }

    /// Flat index of the pressure pin cell.
    pub fn pin_cell(&self) -> Result<usize, ConfigError> {
        let [i, j, k] = self.initial.pin_cell;
        let g = &self.grid;
        if i < g.nx && j < g.ny && k < g.nz {
            Ok(i + g.nx * (j + g.ny * k))
        } else {
            invalid("pin cell outside the grid")
        }
    }

    /// Reservoir model with the reference pressure of porosity set to `p_ref`.
    pub fn reservoir(&self, p_ref: Option<&[f64]>) -> Result<Reservoir, ConfigError> {
        self.validate_shallow()?;
        let grid = self.grid()?;
        let n = grid.n_cells();
        let layers = self.layer_of_cells()?;
        let pick = |f: fn(&LayerConfig) -> f64| layers.iter().map(|&l| f(&self.rock.layers[l])).collect::<Vec<_>>();
        let p0 = match p_ref {
            Some(p) if p.len() == n => p.to_vec(),
            Some(_) => return invalid("reference pressure has the wrong length"),
            None => vec![self.initial.pin_pressure_pa; n],
        };
        let rock = RockProps {
            perm: layers
                .iter()
                .map(|&l| [self.rock.layers[l].permeability_darcy * DARCY_M2; 3])
                .collect(),
            phi0: pick(|l| l.porosity),
            rho_s: pick(|l| l.rock_density_kg_per_m3),
            c_s: pick(|l| l.rock_heat_capacity_j_per_kg_k),
            k_s: pick(|l| l.rock_conductivity_w_per_m_k),
            alpha_b: pick(|l| l.bulk_compressibility_per_pa),
            p0,
        };
        let f = &self.fluid;
        let mut fluid = FluidModel::default();
        fluid.beta_f = f.compressibility_per_pa;
        fluid.k_f = f.conductivity_w_per_m_k;
        fluid.density_override = f.density_kg_per_m3;
        fluid.heat_capacity_override = f.heat_capacity_j_per_kg_k;
        fluid.viscosity_override = f.viscosity_pa_s;
        fluid.expansivity_override = f.expansivity_per_c;
        let gravity = if self.physics.gravity {
            self.physics.gravity_m_per_s2
        } else {
            [0.0; 3]
        };
        Ok(Reservoir::new(
            grid,
            rock,
            fluid,
            self.wells()?,
            self.physics.heat_exchange_w_per_m3_k,
            gravity,
        )?)
    }

    fn validate_shallow(&self) -> Result<(), ConfigError> {
        if self.rock.layers.is_empty() {
            return invalid("at least one rock layer is required");
        }
        Ok(())
    }

    /// Initial temperatures `T_top + gradient · depth` for rock and fluid; the
    /// pressure is left at the pin value.
    pub fn initial_temperatures(&self) -> Result<StateFields, ConfigError> {
        let grid = self.grid()?;
        let t: Vec<f64> = (0..grid.n_cells())
            .map(|c| self.initial.temperature_top_c + self.initial.gradient_c_per_m * grid.center(c)[2])
            .collect();
        Ok(StateFields {
            ts: t.clone(),
            tf: t,
            p: vec![self.initial.pin_pressure_pa; grid.n_cells()],
        })
    }
}
