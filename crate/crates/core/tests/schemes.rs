//! Single steps and convergence orders of the time steppers on problems with
//! closed-form solutions.

use expotherm_core::integrators::{
    adapt_step, erem_step_autonomous, erem_step_nonautonomous, integrate_adaptive, integrate_fixed,
    rosenbrock_s_stage_step, rosm_step, stability_function, theta_euler_step, LinearSettings,
    ModelError, NewtonSettings, OdeSystem, PhiBackendKind, RosenbrockTableau, SchemeId, StepController,
    Stepper, WorkCounters,
};
use expotherm_core::linalg::CsrMatrix;
use expotherm_core::phi::{KrylovOptions, LejaControl};
use nalgebra::DMatrix;
use num_complex::Complex;

/// Scalar `y' = f(t, y)` with derivative `fy`.
struct Scalar {
    f: fn(f64, f64) -> f64,
    fy: fn(f64, f64) -> f64,
    autonomous: bool,
}

impl OdeSystem<f64> for Scalar {
    fn dim(&self) -> usize {
        1
    }
    fn rhs(&self, t: f64, y: &[f64], out: &mut [f64]) -> Result<(), ModelError> {
        out[0] = (self.f)(t, y[0]);
        Ok(())
    }
    fn jacobian(&self, t: f64, y: &[f64]) -> Result<CsrMatrix<f64>, ModelError> {
        Ok(CsrMatrix::from_diagonal(&[(self.fy)(t, y[0])]))
    }
    fn is_autonomous(&self) -> bool {
        self.autonomous
    }
}

/// `y' = L y` for a constant matrix.
struct Linear(CsrMatrix<f64>);

impl OdeSystem<f64> for Linear {
    fn dim(&self) -> usize {
        self.0.n_rows()
    }
    fn rhs(&self, _t: f64, y: &[f64], out: &mut [f64]) -> Result<(), ModelError> {
        self.0.spmv_into(y, out).map_err(|e| ModelError(e.to_string()))
    }
    fn jacobian(&self, _t: f64, _y: &[f64]) -> Result<CsrMatrix<f64>, ModelError> {
        Ok(self.0.clone())
    }
    fn is_autonomous(&self) -> bool {
        true
    }
}

/// `y' = λy`.
struct Dahlquist(f64);

impl OdeSystem<f64> for Dahlquist {
    fn dim(&self) -> usize {
        1
    }
    fn rhs(&self, _t: f64, y: &[f64], out: &mut [f64]) -> Result<(), ModelError> {
        out[0] = self.0 * y[0];
        Ok(())
    }
    fn jacobian(&self, _t: f64, _y: &[f64]) -> Result<CsrMatrix<f64>, ModelError> {
        Ok(CsrMatrix::from_diagonal(&[self.0]))
    }
    fn is_autonomous(&self) -> bool {
        true
    }
}

fn decay() -> Scalar {
    Scalar { f: |_, y| -y, fy: |_, _| -1.0, autonomous: true }
}

fn forced() -> Scalar {
    Scalar { f: |t, y| -y + t.sin(), fy: |_, _| -1.0, autonomous: false }
}

/// Exact solution of `y' = −y + sin t`, `y(0) = 1`.
fn forced_exact(t: f64) -> f64 {
    1.5 * (-t).exp() + 0.5 * (t.sin() - t.cos())
}

fn tight(scheme: SchemeId) -> Stepper<f64> {
    let mut s = Stepper::new(scheme).unwrap();
    s.newton = NewtonSettings { tol_a: 1e-13, tol_r: 1e-13, max_iter: 50 };
    s.linear = LinearSettings { tol: 1e-14, max_iter: 200 };
    s.krylov = KrylovOptions { dim: 10, tol: 1e-13 };
    s.leja = LejaControl { tol_a: 1e-13, tol_r: 1e-13, ..LejaControl::default() };
    s
}

fn slope(taus: &[f64], errs: &[f64]) -> f64 {
    let n = taus.len() as f64;
    let xs: Vec<f64> = taus.iter().map(|t| t.ln()).collect();
    let ys: Vec<f64> = errs.iter().map(|e| e.ln()).collect();
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    sxy / sxx
}

const SCHEMES: [(SchemeId, f64, f64); 8] = [
    (SchemeId::ThetaEuler(1.0), 1.0, 0.15),
    (SchemeId::ThetaEuler(0.5), 2.0, 0.2),
    (SchemeId::Erem(PhiBackendKind::Krylov), 2.0, 0.2),
    (SchemeId::Erem(PhiBackendKind::Leja), 2.0, 0.2),
    (SchemeId::Rosm(1.0), 1.0, 0.15),
    (SchemeId::Rosm(0.5), 2.0, 0.2),
    (SchemeId::Ros2, 2.0, 0.2),
    (SchemeId::Ros3p, 3.0, 0.3),
];

#[test]
fn every_scheme_keeps_a_zero_rhs_fixed() {
    let zero = Scalar { f: |_, _| 0.0, fy: |_, _| 0.0, autonomous: true };
    for (s, _, _) in SCHEMES {
        let mut w = WorkCounters::default();
        let out = tight(s).step(&zero, 0.0, &[2.5], 0.3, &mut w).unwrap();
        assert_eq!(out.y, vec![2.5], "{s}");
        if let Some(e) = out.embedded {
            assert_eq!(e, vec![2.5]);
        }
    }
}

#[test]
fn theta_euler_closed_forms() {
    let (n, l) = (NewtonSettings::default(), LinearSettings::default());
    let mut w = WorkCounters::default();
    let y = theta_euler_step(&decay(), 0.0, &[1.0], 0.1, 1.0, &n, &l, &mut w).unwrap();
    assert!((y[0] - 1.0 / 1.1).abs() < 1e-12);
    let y = theta_euler_step(&decay(), 0.0, &[1.0], 0.1, 0.5, &n, &l, &mut w).unwrap();
    assert!((y[0] - (1.0 - 0.05) / (1.0 + 0.05)).abs() < 1e-12);
    let before = w.linear_solves;
    let y = theta_euler_step(&decay(), 0.0, &[1.0], 0.1, 0.0, &n, &l, &mut w).unwrap();
    assert!((y[0] - 0.9).abs() < 1e-15);
    assert_eq!(w.linear_solves, before);
}

#[test]
fn erem_closed_forms() {
    let s = tight(SchemeId::Erem(PhiBackendKind::Krylov));
    for kind in [PhiBackendKind::Krylov, PhiBackendKind::Leja] {
        let b = s.backend(kind);
        let mut w = WorkCounters::default();
        let sys = Scalar { f: |_, y| -y + 1.0, fy: |_, _| -1.0, autonomous: true };
        let y = erem_step_autonomous(&sys, 0.0, &[0.0], 0.5, &b, &mut w).unwrap();
        assert!((y[0] - (1.0 - (-0.5f64).exp())).abs() < 1e-12, "{kind:?}");

        let ramp = Scalar { f: |t, _| t, fy: |_, _| 0.0, autonomous: false };
        let y = erem_step_nonautonomous(&ramp, 0.0, &[0.0], 1.0, &[1.0], &b, &mut w).unwrap();
        assert!((y[0] - 0.5).abs() < 1e-12, "{kind:?}");

        let growth = Scalar { f: |t, y| y + t, fy: |_, _| 1.0, autonomous: false };
        let (y0, tau) = (1.0, 0.5);
        let exact = (y0 + 1.0) * f64::exp(tau) - tau - 1.0;
        let y = erem_step_nonautonomous(&growth, 0.0, &[y0], tau, &[1.0], &b, &mut w).unwrap();
        assert!((y[0] - exact).abs() < 1e-10, "{kind:?}");

        let auto = erem_step_autonomous(&sys, 0.0, &[0.2], 0.5, &b, &mut w).unwrap();
        let non = erem_step_nonautonomous(&sys, 0.0, &[0.2], 0.5, &[0.0], &b, &mut w).unwrap();
        assert!((auto[0] - non[0]).abs() < 1e-13);
    }
}

#[test]
fn erem_reproduces_the_linear_propagator() {
    let n = 40;
    let l = CsrMatrix::<f64>::tridiagonal(n, 1.0, -2.0, 1.0).scaled(30.0);
    let y0: Vec<f64> = (0..n).map(|i| (i as f64 * 0.2).sin() + 0.5).collect();
    let tau = 0.05;
    let mut m = DMatrix::<f64>::zeros(n, n);
    for (i, row) in l.to_dense_rows().iter().enumerate() {
        for (j, x) in row.iter().enumerate() {
            m[(i, j)] = x * tau;
        }
    }
    let exact = m.exp() * nalgebra::DVector::from_vec(y0.clone());
    for kind in [PhiBackendKind::Krylov, PhiBackendKind::Leja] {
        let s = tight(SchemeId::Erem(kind));
        let mut w = WorkCounters::default();
        let y = s.step(&Linear(l.clone()), 0.0, &y0, tau, &mut w).unwrap().y;
        let err = y.iter().zip(exact.iter()).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        let scale = y0.iter().fold(0.0f64, |m, x| m.max(x.abs()));
        assert!(err <= 1e-10 * scale, "{kind:?} {err:e}");
    }
}

#[test]
fn rosm_matches_its_stability_function() {
    let lin = LinearSettings::default();
    for gamma in [0.5, 1.0, 2.0] {
        for &(lambda, tau) in &[(-1.0, 0.1), (-30.0, 0.5), (0.4, 0.2)] {
            let sys = Dahlquist(lambda);
            let mut w = WorkCounters::default();
            let y = rosm_step(&sys, 0.0, &[1.0], tau, gamma, None, &lin, &mut w).unwrap();
            let r = stability_function(SchemeId::Rosm(gamma), Complex::new(tau * lambda, 0.0)).unwrap();
            let direct = (1.0 + tau * lambda * (1.0 - gamma)) / (1.0 - gamma * tau * lambda);
            assert!((y[0] - r.re).abs() < 1e-12);
            assert!((y[0] - direct).abs() < 1e-12);
            assert_eq!(w.linear_solves, 1);
        }
    }
    let mut w = WorkCounters::default();
    let half = rosm_step(&decay(), 0.0, &[1.0], 0.1, 0.5, None, &lin, &mut w).unwrap();
    let trap = theta_euler_step(&decay(), 0.0, &[1.0], 0.1, 0.5, &NewtonSettings::default(), &lin, &mut w).unwrap();
    assert!((half[0] - trap[0]).abs() < 1e-12);
}

#[test]
fn ros2_local_error_is_third_order() {
    let tab = RosenbrockTableau::ros2();
    let lin = LinearSettings { tol: 1e-15, max_iter: 100 };
    let taus = [1e-1, 1e-2, 1e-3];
    let errs: Vec<f64> = taus
        .iter()
        .map(|&tau| {
            let mut w = WorkCounters::default();
            let (y, _) = rosenbrock_s_stage_step(&decay(), 0.0, &[1.0], tau, &tab, None, &lin, &mut w).unwrap();
            (y[0] - (-tau).exp()).abs()
        })
        .collect();
    let p = slope(&taus, &errs);
    assert!((p - 3.0).abs() < 0.2, "{p}");
}

#[test]
fn embedded_solutions_lose_one_order() {
    let lin = LinearSettings { tol: 1e-15, max_iter: 100 };
    for (tab, want) in [(RosenbrockTableau::ros2(), 2.0), (RosenbrockTableau::ros3p(), 3.0)] {
        let taus = [4e-2, 2e-2, 1e-2, 5e-3];
        let errs: Vec<f64> = taus
            .iter()
            .map(|&tau| {
                let mut w = WorkCounters::default();
                let (_, e) = rosenbrock_s_stage_step(&forced(), 0.3, &[forced_exact(0.3)], tau, &tab, Some(&[0.3f64.cos()]), &lin, &mut w).unwrap();
                (e[0] - forced_exact(0.3 + tau)).abs()
            })
            .collect();
        let p = slope(&taus, &errs);
        assert!((p - want).abs() < 0.25, "{} embedded local order {p}", tab.name);
    }
}

#[test]
fn rosenbrock_shares_one_matrix_per_step() {
    for (tab, stages) in [(RosenbrockTableau::ros2(), 2), (RosenbrockTableau::ros3p(), 3)] {
        let mut w = WorkCounters::default();
        rosenbrock_s_stage_step(&forced(), 0.0, &[1.0], 0.1, &tab, None, &LinearSettings::default(), &mut w).unwrap();
        assert_eq!(w.jacobian_evals, 1);
        assert_eq!(w.linear_solves, stages);
    }
}

fn observed(scheme: SchemeId, sys: &Scalar, exact: f64, taus: &[f64]) -> (f64, Vec<f64>) {
    let s = tight(scheme);
    let errs: Vec<f64> = taus
        .iter()
        .map(|&tau| {
            let mut w = WorkCounters::default();
            let y = integrate_fixed(&s, sys, 0.0, &[1.0], 2.0, tau, &mut w).unwrap();
            (y[0] - exact).abs()
        })
        .collect();
    (slope(taus, &errs), errs)
}

#[test]
fn global_orders_on_dahlquist() {
    let taus = [0.1, 0.05, 0.025, 0.0125];
    for (scheme, want, tol) in SCHEMES {
        if matches!(scheme, SchemeId::Erem(_)) {
            continue;
        }
        let (p, errs) = observed(scheme, &decay(), (-2f64).exp(), &taus);
        assert!((p - want).abs() <= tol, "{scheme}: slope {p}, errors {errs:?}");
    }
}

#[test]
fn global_orders_on_a_forced_decay() {
    let taus = [0.1, 0.05, 0.025, 0.0125];
    for scheme in [SchemeId::Erem(PhiBackendKind::Krylov), SchemeId::Erem(PhiBackendKind::Leja)] {
        let (p, errs) = observed(scheme, &forced(), forced_exact(2.0), &taus);
        assert!((p - 2.0).abs() <= 0.2, "{scheme}: slope {p}, errors {errs:?}");
    }
    let (p, errs) = observed(SchemeId::Ros3p, &forced(), forced_exact(2.0), &taus);
    assert!((p - 3.0).abs() <= 0.2, "ROS3p: slope {p}, errors {errs:?}");
}

#[test]
fn stability_examples() {
    let one = Complex::new(1.0, 0.0);
    for s in [
        SchemeId::ThetaEuler(1.0),
        SchemeId::ThetaEuler(0.5),
        SchemeId::Erem(PhiBackendKind::Krylov),
        SchemeId::Rosm(1.0),
        SchemeId::Ros2,
        SchemeId::Ros3p,
    ] {
        let r = stability_function(s, Complex::new(0.0, 0.0)).unwrap();
        assert!((r - one).norm() < 1e-15, "{s}");
    }
    let big = Complex::<f64>::new(-1e6, 0.0);
    let r1 = stability_function(SchemeId::ThetaEuler(1.0), big).unwrap().norm();
    assert!((r1 - 1e-6).abs() < 1e-9);
    let rh = stability_function(SchemeId::ThetaEuler(0.5), big).unwrap().norm();
    assert!((rh - 1.0).abs() < 1e-5);
    let e = stability_function(SchemeId::Erem(PhiBackendKind::Leja), Complex::new(-2.0, 1.0)).unwrap();
    assert!((e - Complex::new(-2.0, 1.0).exp()).norm() < 1e-15);
    assert!(stability_function(SchemeId::ThetaEuler(1.0), Complex::new(1.0, 0.0)).is_err());
}

#[test]
fn controller_examples() {
    let c = StepController::<f64>::new(1.0, 1e-6, 1e-6);
    assert_eq!(adapt_step(&c, 1.0, 2), (true, 0.9));
    assert_eq!(adapt_step(&c, 0.0, 2), (true, 5.0));
    let (ok, tau) = adapt_step(&c, 16.0, 2);
    assert!(!ok && (tau - 0.225).abs() < 1e-15);
}

#[test]
fn adaptive_integration_meets_tolerance() {
    for scheme in [SchemeId::Ros2, SchemeId::Ros3p] {
        let s = tight(scheme);
        let mut w = WorkCounters::default();
        let rep = integrate_adaptive(&s, &forced(), 0.0, &[1.0], 5.0, StepController::new(0.1, 1e-6, 1e-6), &mut w).unwrap();
        assert!((rep.y[0] - forced_exact(5.0)).abs() < 1e-4, "{scheme}");
        assert!(rep.accepted > 0);
    }
    let s = tight(SchemeId::ThetaEuler(1.0));
    let mut w = WorkCounters::default();
    assert!(integrate_adaptive(&s, &forced(), 0.0, &[1.0], 1.0, StepController::new(0.1, 1e-6, 1e-6), &mut w).is_err());
}
