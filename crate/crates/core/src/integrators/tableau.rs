use crate::integrators::StepError;
use crate::scalar::Real;

/// Coefficients of an s-stage Rosenbrock scheme
/// `(I/(τγ) − J) kᵢ = f(yⁿ + Σ aᵢⱼkⱼ, tₙ + αᵢτ) − Σ (cᵢⱼ/τ) kⱼ + τγᵢ ∂ₜf`.
///
/// `a` and `c` are read strictly below the diagonal; `c[i][i]` carries `1/γ`
/// as printed in the usual tables and is not used by the step.
#[derive(Clone, Debug, PartialEq)]
pub struct RosenbrockTableau<T> {
    pub name: &'static str,
    pub stages: usize,
    pub gamma: T,
    pub a: Vec<Vec<T>>,
    pub c: Vec<Vec<T>>,
    pub alpha: Vec<T>,
    pub gamma_i: Vec<T>,
    pub b: Vec<T>,
    pub b_hat: Vec<T>,
    pub order: u32,
}

/// ROS2(1), coefficient strings as printed.
pub(crate) const ROS2_STRINGS: &[(&str, &str)] = &[
    ("gamma", "1.707106781186547e+00"),
    ("a21", "5.857864376269050e-01"),
    ("c11", "5.857864376269050e-01"),
    ("c21", "1.171572875253810e+00"),
    ("c22", "5.857864376269050e-01"),
    ("gamma1", "1.707106781186547e+00"),
    ("gamma2", "-1.707106781186547e+00"),
    ("alpha1", "0"),
    ("alpha2", "1"),
    ("b1", "8.786796564403575e-01"),
    ("b2", "2.928932188134525e-01"),
    ("bhat1", "5.857864376269050e-01"),
    ("bhat2", "0"),
];

/// ROS3p, coefficient strings as printed.
pub(crate) const ROS3P_STRINGS: &[(&str, &str)] = &[
    ("gamma", "7.886751345948129e-01"),
    ("a21", "1.267949192431123e+00"),
    ("a31", "1.267949192431123e+00"),
    ("a32", "0"),
    ("c11", "1.267949192431123e+00"),
    ("c21", "1.607695154586736e+00"),
    ("c22", "1.267949192431123e+00"),
    ("c31", "3.464101615137755e+00"),
    ("c32", "1.732050807568877e+00"),
    ("c33", "1.267949192431123e+00"),
    ("gamma1", "7.886751345948129e-01"),
    ("gamma2", "-2.113248654051871e-01"),
    ("gamma3", "-1.077350269189626e+00"),
    ("alpha1", "0"),
    ("alpha2", "1"),
    ("alpha3", "1"),
    ("b1", "2"),
    ("b2", "5.773502691896258e-01"),
    ("b3", "4.226497308103742e-01"),
    ("bhat1", "2.113248654051871e+00"),
    ("bhat2", "1"),
    ("bhat3", "4.226497308103742e-01"),
];

fn lookup<T: Real>(table: &[(&str, &str)], key: &str) -> T {
    table
        .iter()
        .find(|(k, _)| *k == key)
        .map(|(_, v)| T::lit(v.parse::<f64>().expect("coefficient literal")))
        .unwrap_or_else(T::zero)
}

fn from_strings<T: Real>(
    name: &'static str,
    stages: usize,
    order: u32,
    table: &[(&str, &str)],
) -> RosenbrockTableau<T> {
    let get = |k: String| lookup::<T>(table, &k);
    let mat = |p: &str| {
        (0..stages)
            .map(|i| (0..stages).map(|j| get(format!("{p}{}{}", i + 1, j + 1))).collect())
            .collect()
    };
    let vec = |p: &str| (0..stages).map(|i| get(format!("{p}{}", i + 1))).collect();
    RosenbrockTableau {
        name,
        stages,
        gamma: get("gamma".into()),
        a: mat("a"),
        c: mat("c"),
        alpha: vec("alpha"),
        gamma_i: vec("gamma"),
        b: vec("b"),
        b_hat: vec("bhat"),
        order,
    }
}

impl<T: Real> RosenbrockTableau<T> {
    /// Two-stage, second order, L-stable; embedded first order.
    pub fn ros2() -> Self {
        from_strings("ROS2(1)", 2, 2, ROS2_STRINGS)
    }

    /// Three-stage, third order, A-stable; embedded second order.
    pub fn ros3p() -> Self {
        from_strings("ROS3p", 3, 3, ROS3P_STRINGS)
    }

    /// Coefficient strings of the shipped tableaus, keyed by name.
    pub fn printed(name: &str) -> Option<&'static [(&'static str, &'static str)]> {
        match name {
            "ROS2(1)" => Some(ROS2_STRINGS),
            "ROS3p" => Some(ROS3P_STRINGS),
            _ => None,
        }
    }

    pub fn validate(&self) -> Result<(), StepError> {
        let s = self.stages;
        let square = |m: &Vec<Vec<T>>| m.len() == s && m.iter().all(|r| r.len() == s);
        let ok = s >= 1
            && square(&self.a)
            && square(&self.c)
            && [&self.alpha, &self.gamma_i, &self.b, &self.b_hat]
                .iter()
                .all(|v| v.len() == s)
            && self.gamma > T::zero();
        if !ok {
            return Err(StepError::InvalidArgument(format!(
                "inconsistent tableau {}",
                self.name
            )));
        }
        Ok(())
    }
}
