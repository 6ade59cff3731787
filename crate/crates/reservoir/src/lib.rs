//! Single-phase geothermal reservoir simulation: water properties, a two-point
//! flux finite-volume discretization on structured grids, sequential splitting
//! of the temperature and pressure systems, and a convergence/efficiency harness.

pub mod fluid;
pub mod grid;
pub mod systems;
pub mod tpfa;
pub mod scenario;
pub mod simulate;
pub mod output;
pub mod selftest;
pub mod study;
