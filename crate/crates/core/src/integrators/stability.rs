use num_complex::Complex;

use crate::integrators::{RosenbrockTableau, SchemeId, StepError};
use crate::scalar::Real;

fn ratio<T: Real>(num: Complex<T>, den: Complex<T>) -> Result<Complex<T>, StepError> {
    if den.norm() == T::zero() {
        return Err(StepError::Pole);
    }
    Ok(num / den)
}

/// Growth factor `R(z)` of one step on `y' = λy`, `z = τλ`.
pub fn stability_function<T: Real>(scheme: SchemeId, z: Complex<T>) -> Result<Complex<T>, StepError> {
    scheme.validate()?;
    let one = Complex::new(T::one(), T::zero());
    match scheme {
        SchemeId::ThetaEuler(th) | SchemeId::Rosm(th) => {
            let th = T::lit(th);
            ratio(one + z * (T::one() - th), one - z * th)
        }
        SchemeId::Erem(_) => Ok(z.exp()),
        SchemeId::Ros2 => rosenbrock_r(&RosenbrockTableau::ros2(), z),
        SchemeId::Ros3p => rosenbrock_r(&RosenbrockTableau::ros3p(), z),
    }
}

/// Stage recursion `(1 − γz) kᵢ = γ(z(1 + Σ aᵢⱼkⱼ) − Σ cᵢⱼkⱼ)`, `R = 1 + Σ bᵢkᵢ`.
fn rosenbrock_r<T: Real>(tab: &RosenbrockTableau<T>, z: Complex<T>) -> Result<Complex<T>, StepError> {
    let one = Complex::new(T::one(), T::zero());
    let den = one - z * tab.gamma;
    if den.norm() == T::zero() {
        return Err(StepError::Pole);
    }
    let mut k: Vec<Complex<T>> = Vec::with_capacity(tab.stages);
    for i in 0..tab.stages {
        let mut arg = one;
        let mut corr = Complex::new(T::zero(), T::zero());
        for (j, kj) in k.iter().enumerate() {
            arg = arg + *kj * tab.a[i][j];
            corr = corr + *kj * tab.c[i][j];
        }
        k.push((z * arg - corr) * tab.gamma / den);
    }
    Ok(k.iter().zip(&tab.b).fold(one, |acc, (kk, &b)| acc + *kk * b))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::integrators::PhiBackendKind;

    fn c(x: f64) -> Complex<f64> {
        Complex::new(x, 0.0)
    }

    #[test]
    fn consistency_at_zero() {
        for s in [
            SchemeId::ThetaEuler(0.0),
            SchemeId::ThetaEuler(1.0),
            SchemeId::Erem(PhiBackendKind::Krylov),
            SchemeId::Rosm(0.5),
            SchemeId::Ros2,
            SchemeId::Ros3p,
        ] {
            let r = stability_function(s, c(0.0)).unwrap();
            assert!((r - 1.0).norm() < 1e-15, "{s}");
        }
    }

    #[test]
    fn limits_at_minus_infinity() {
        let r1 = stability_function(SchemeId::ThetaEuler(1.0), c(-1e6)).unwrap();
        assert!((r1.norm() - 1e-6).abs() < 1e-9);
        let rh = stability_function(SchemeId::ThetaEuler(0.5), c(-1e6)).unwrap();
        assert!((rh.norm() - 1.0).abs() < 1e-5);
        let r2 = stability_function(SchemeId::Ros2, c(-1e8)).unwrap();
        assert!(r2.norm() < 1e-6);
    }

    #[test]
    fn pole() {
        assert_eq!(
            stability_function(SchemeId::ThetaEuler(0.5), c(2.0)),
            Err(StepError::Pole)
        );
    }
}
