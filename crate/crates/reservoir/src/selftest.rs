//! Quick oracle checks runnable from the command line.

use expotherm_core::integrators::{stability_function, RosenbrockTableau, SchemeId};
use expotherm_core::linalg::{dense_phi_vec, gershgorin_interval, CsrMatrix, DenseMatrix};
use expotherm_core::phi::{phi_krylov, phi_leja, KrylovOptions, LejaControl};
use num_complex::Complex;

use crate::grid::{transmissibilities, StructuredGrid};
use crate::scenario::ScenarioConfig;
use crate::simulate::initial_pressure;

pub struct Check {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

fn check(name: &'static str, value: f64, limit: f64) -> Check {
    Check {
        name,
        passed: value <= limit,
        detail: format!("{value:.3e} <= {limit:.0e}"),
    }
}

fn rel(a: &[f64], b: &[f64]) -> f64 {
    let num: f64 = a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum();
    let den: f64 = b.iter().map(|y| y * y).sum();
    (num / den).sqrt()
}

fn phi_checks(out: &mut Vec<Check>) {
    let n = 40;
    let a = CsrMatrix::<f64>::tridiagonal(n, 1.0, -2.0, 1.0).scaled(10.0);
    let v: Vec<f64> = (0..n).map(|i| (i as f64 * 0.37).sin() + 1.0).collect();
    let tau = 0.5;
    let dense = DenseMatrix::from_rows(&a.to_dense_rows()).expect("square").scaled(tau);
    let exact = dense_phi_vec(1, &dense, &v).expect("dense phi");
    let kry = phi_krylov(|x, y| a.spmv_into(x, y).expect("square"), tau, &v, 1, KrylovOptions { dim: 10, tol: 1e-8 });
    out.push(match kry {
        Ok(r) => check("krylov phi1 vs dense", rel(&r.value, &exact), 1e-6),
        Err(e) => Check { name: "krylov phi1 vs dense", passed: false, detail: e.to_string() },
    });
    let ctrl = LejaControl { tol_a: 1e-10, tol_r: 1e-10, ..LejaControl::default() };
    let leja = phi_leja(|x, y| a.spmv_into(x, y).expect("square"), tau, &v, 1, gershgorin_interval(&a).expect("square"), ctrl, 1.0);
    out.push(match leja {
        Ok(r) => check("leja phi1 vs dense", rel(&r.value, &exact), 1e-6),
        Err(e) => Check { name: "leja phi1 vs dense", passed: false, detail: e.to_string() },
    });
}

/// Runs all checks; the caller reports them.
pub fn run() -> Vec<Check> {
    let mut out = Vec::new();
    phi_checks(&mut out);

    let g = RosenbrockTableau::<f64>::ros2().gamma;
    out.push(check("ROS2(1) gamma", (g - 1.707106781186547).abs(), 0.0));

    let mut worst: f64 = 0.0;
    for i in 0..50 {
        for j in 0..50 {
            let z = Complex::new(-(i as f64) * 0.8, (j as f64 - 25.0) * 0.8);
            for s in [SchemeId::ThetaEuler(0.5), SchemeId::Rosm(1.0), SchemeId::Ros3p] {
                if let Ok(r) = stability_function(s, z) {
                    worst = worst.max(r.norm() - 1.0);
                }
            }
        }
    }
    out.push(check("A-stability sample", worst, 1e-12));

    let h = 3.0;
    let grid = StructuredGrid::new(3, 3, 3, h, h, h).expect("grid");
    let t = transmissibilities(&grid, &vec![[2.0; 3]; 27]).expect("positive");
    out.push(check(
        "homogeneous transmissibility",
        t.iter().map(|v| (v - 2.0 * h).abs()).fold(0.0, f64::max),
        1e-12,
    ));

    let mut cfg = ScenarioConfig::two_layer(3, 3, 4);
    cfg.wells.clear();
    cfg.fluid.density_kg_per_m3 = Some(1000.0);
    let hydro = cfg
        .reservoir(None)
        .ok()
        .and_then(|res| {
            let tf = cfg.initial_temperatures().ok()?.tf;
            let p = initial_pressure(&res, &tf, Some((0, 1e5))).ok()?;
            let scale = res.darcy_velocity(&tf, &vec![0.0; tf.len()]).flux.iter().map(|q| q.abs()).fold(0.0, f64::max);
            Some(res.darcy_velocity(&tf, &p).flux.iter().map(|q| q.abs()).fold(0.0, f64::max) / scale)
        })
        .unwrap_or(f64::INFINITY);
    out.push(check("hydrostatic flux residual", hydro, 1e-10));
    out
}
