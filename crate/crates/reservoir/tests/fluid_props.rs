use expotherm_reservoir::fluid::{
    expansivity, porosity, water_density, water_heat_capacity, water_viscosity, FluidModel, DARCY_M2,
};

/// Five-point central difference of the density.
fn fd_expansivity(t: f64) -> f64 {
    let h = 1e-2;
    let d = (water_density(t - 2.0 * h) - 8.0 * water_density(t - h) + 8.0 * water_density(t + h)
        - water_density(t + 2.0 * h))
        / (12.0 * h);
    -d / water_density(t)
}

#[test]
fn density_examples() {
    assert_eq!(water_density(3.9863), 1000.0);
    let t: f64 = 60.0;
    let direct = 1000.0 * (1.0 - ((t - 3.9863).powi(2) / 508929.2) * ((t + 288.9414) / (t + 68.12963)));
    assert_eq!(water_density(60.0), direct);
    assert!((water_density(60.0) - 983.2).abs() < 0.5);
    assert!(water_density(100.0) < water_density(60.0));
}

#[test]
fn viscosity_examples() {
    assert_eq!(water_viscosity(0.0).unwrap(), 1.787e-3);
    let first = 1.787e-3 * ((-0.03288 + 1.962e-4 * 20.0) * 20.0f64).exp();
    assert!((water_viscosity(20.0).unwrap() - first).abs() < 1e-18);
    let below = water_viscosity(40.0).unwrap();
    let above = water_viscosity(40.0 + 1e-9).unwrap();
    assert!(((below - above) / below).abs() < 0.05);
    assert!(water_viscosity(-1.0).is_err() && water_viscosity(301.0).is_err());
}

#[test]
fn heat_capacity_examples() {
    assert!((water_heat_capacity(1e-12) - 4206.3640128).abs() < 1e-8);
    let t: f64 = 50.0;
    let direct = -1.3320081e-4 * t.powi(3) + 0.0328405 * t * t - 1.9254125 * t + 4206.3640128;
    assert_eq!(water_heat_capacity(50.0), direct);
    // leading coefficient from the third difference: Δ³c / 6h³
    let h = 1.0;
    let d3 = water_heat_capacity(3.0 * h) - 3.0 * water_heat_capacity(2.0 * h) + 3.0 * water_heat_capacity(h)
        - water_heat_capacity(0.0);
    assert!((d3 / 6.0 - -1.3320081e-4).abs() < 1e-12);
}

#[test]
fn expansivity_examples() {
    assert!(expansivity(3.9863).abs() < 1e-15);
    let fd = fd_expansivity(60.0);
    assert!(((expansivity(60.0) - fd) / fd).abs() < 1e-8);
    assert!(expansivity(80.0) > expansivity(20.0));
}

#[test]
fn expansivity_sweep_matches_finite_differences() {
    for k in 1..100 {
        let t = k as f64;
        let fd = fd_expansivity(t);
        let a = expansivity(t);
        assert!((a - fd).abs() <= 1e-8 * a.abs().max(1e-6), "T = {t}: {a:e} vs {fd:e}");
    }
}

#[test]
fn viscosity_positive_and_decreasing() {
    let mut prev = f64::INFINITY;
    for k in 0..200 {
        let t = 0.5 * k as f64;
        let mu = water_viscosity(t).unwrap();
        assert!(mu > 0.0 && mu < prev, "T = {t}");
        prev = mu;
    }
}

#[test]
fn correlations_are_positive_on_their_range() {
    for k in 0..=300 {
        let t = k as f64;
        assert!(water_density(t) > 0.0);
        assert!(water_viscosity(t).unwrap() > 0.0);
        if t >= 3.9863 {
            assert!(expansivity(t) >= 0.0);
        }
    }
}

#[test]
fn evaluation_is_bit_identical() {
    for k in 0..100 {
        let t = 0.731 * k as f64;
        assert_eq!(water_density(t).to_bits(), water_density(t).to_bits());
        assert_eq!(expansivity(t).to_bits(), expansivity(t).to_bits());
        assert_eq!(water_heat_capacity(t).to_bits(), water_heat_capacity(t).to_bits());
    }
}

#[test]
fn porosity_examples() {
    assert_eq!(porosity(0.2, 5e6, 5e6, 1e-7).unwrap(), 0.2);
    assert_eq!(porosity(0.2, 9e9, 5e6, 0.0).unwrap(), 0.2);
    assert!((porosity(0.2, 1e6, 0.0, 1e-7).unwrap() - 0.22).abs() < 1e-15);
    assert!(porosity(0.2, 1e8, 0.0, 1e-7).is_err());
    assert!(porosity(1.2, 0.0, 0.0, 0.0).is_err());
}

#[test]
fn model_clamps_and_counts() {
    let m = FluidModel::default();
    assert_eq!(m.heat_capacity(150.0), water_heat_capacity(100.0));
    assert_eq!(m.density(-5.0), water_density(0.0));
    assert_eq!(m.warnings(), 2);
    let d = m.detached();
    assert_eq!(d.warnings(), 0);
    m.reset_warnings();
    assert_eq!(m.warnings(), 0);
    assert!((DARCY_M2 - 9.869233e-13).abs() < 1e-25);
}
