//! Sparse linear algebra, φ-function actions and stiff time integrators.
//!
//! The kernels are generic over [`scalar::Real`] (`f32` or `f64`); the
//! aliases below fix the scalar to `f64`.

pub mod integrators;
pub mod linalg;
pub mod phi;
pub mod scalar;

pub use scalar::Real;

pub type Csr = linalg::CsrMatrix<f64>;
pub type Dense = linalg::DenseMatrix<f64>;
pub type Ilu = linalg::Ilu0<f64>;
pub type PhiOutput = phi::PhiResult<f64>;
pub type Tableau = integrators::RosenbrockTableau<f64>;
pub type Controller = integrators::StepController<f64>;
pub type Stepper64 = integrators::Stepper<f64>;
