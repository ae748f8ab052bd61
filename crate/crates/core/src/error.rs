use thiserror::Error;

use crate::Complex;

#[derive(Debug, Clone, Error)]
pub enum Error {
    #[error("dimension mismatch in `{field}`: expected {expected}, found {found}")]
    DimensionMismatch {
        field: &'static str,
        expected: usize,
        found: usize,
    },

    #[error("invalid parameter point: {0}")]
    InvalidParameter(String),

    #[error("parameter `{name}` = {value} is outside its admissible domain")]
    OutsideParameterDomain { name: String, value: f64 },

    #[error(
        "finite-difference stencil for `{name}` (value {value}, step {step}) leaves the parameter domain; \
         a one-sided scheme must be requested explicitly"
    )]
    StepOutsideDomain { name: String, value: f64, step: f64 },

    #[error("metric not positive-definite at x = {x:?}")]
    MetricNotPositiveDefinite { x: Vec<f64> },

    #[error("non-finite metric sample at x = {x:?}")]
    NonFiniteMetric { x: Vec<f64> },

    #[error("non-finite sigma sample for parameter {parameter} at x = {x:?}")]
    NonFiniteSigma { parameter: usize, x: Vec<f64> },

    #[error("integrand is not finite at x = {x:?}")]
    NonFiniteIntegrand { x: Vec<f64> },

    #[error(
        "quadrature did not converge after {evaluations} evaluations: best value {best}, error estimate {estimate:e}"
    )]
    QuadratureNonConvergence {
        best: Complex,
        estimate: f64,
        evaluations: usize,
    },

    #[error("state is not normalized: <psi|psi> = {norm}")]
    NotNormalized { norm: f64 },

    #[error("quantum geometric tensor is not Hermitian (residue {residue:e})")]
    NotHermitian { residue: f64 },

    #[error("fidelity fit residual {residual:e} exceeds threshold {threshold:e}")]
    FitResidual { residual: f64, threshold: f64 },

    #[error("no analytic reference for {quantity} of model `{model}`")]
    NoAnalyticReference { model: String, quantity: String },

    #[error("unknown model: {0}")]
    UnknownModel(String),

    #[error("eigensolver did not converge after {iterations} iterations")]
    EigenNonConvergence { iterations: usize },

    #[error("levels {a} and {b} are too close ({gap:e}) for phase alignment across the stencil")]
    LevelCrossing { a: usize, b: usize, gap: f64 },

    #[error("singular reparameterization Jacobian at {at:?}")]
    SingularJacobian { at: Vec<f64> },

    #[error("non-positive sqrt(g) on spectral grid at u = {u}")]
    NonPositiveWeight { u: f64 },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
}

pub type Result<T> = std::result::Result<T, Error>;
