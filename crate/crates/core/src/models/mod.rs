//! Built-in models: closed-form states, metrics, potentials and reference tensors.
//!
//! | name                     | parameters        | states      |
//! |--------------------------|-------------------|-------------|
//! | `anharmonic-1d`          | `lambda, omega`   | all `n`     |
//! | `morse-like`             | `lambda, omega`   | ground only |
//! | `coupled-anharmonic-2d`  | `k1, k2, a, b`    | ground only |
//! | `generalized-anharmonic` | `lambda, b, c`    | all `n`     |
//! | `flat-oscillator`        | `omega`           | all `n`     |

mod anharmonic;
mod coupled;
mod flat;
mod generalized;
mod morse;
pub mod special;

use std::fmt;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::quadrature::QuadratureConfig;
use crate::spectrum::SpectralSetup;
use crate::types::{ParameterPoint, QuantumNumber, QuantumSystem};

pub use coupled::{coupled_ground_state, coupled_potential};
pub use morse::{g_lambda_lambda, level_set, phase_portrait_hamiltonian, turning_point, LevelSet};

/// Classical potential `V(x, λ)`.
pub type PotentialFn = dyn Fn(&[f64], &ParameterPoint) -> f64 + Send + Sync;
type ReferenceFn = fn(Quantity, QuantumNumber, &ParameterPoint, f64) -> Result<Reference>;

pub const MODEL_NAMES: [&str; 5] = [
    anharmonic::NAME,
    morse::NAME,
    coupled::NAME,
    generalized::NAME,
    flat::NAME,
];

/// Which quantum numbers a model's closed form covers.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StateSupport {
    AllLevels,
    GroundOnly,
}

/// Quantities with closed-form references.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Quantity {
    Qmt,
    QmtComponent(usize, usize),
    BerryCurvature,
    BerryConnection,
    Energy,
    NormConst,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Reference {
    Matrix(DMatrix<f64>),
    Vector(DVector<f64>),
    Scalar(f64),
}

impl Reference {
    pub fn matrix(self) -> Option<DMatrix<f64>> {
        match self {
            Reference::Matrix(m) => Some(m),
            _ => None,
        }
    }

    pub fn vector(self) -> Option<DVector<f64>> {
        match self {
            Reference::Vector(v) => Some(v),
            _ => None,
        }
    }

    pub fn scalar(self) -> Option<f64> {
        match self {
            Reference::Scalar(s) => Some(s),
            _ => None,
        }
    }
}

/// One registered model at a fixed `ħ`.
#[derive(Clone)]
pub struct ModelSpec {
    pub name: &'static str,
    pub hbar: f64,
    pub system: QuantumSystem,
    pub potential: Option<Arc<PotentialFn>>,
    /// 1-D eigenproblem description, if the model has one.
    pub spectral: Option<SpectralSetup>,
    /// Box the registration check and the samplers draw parameters from.
    pub sample_box: Vec<(f64, f64)>,
    pub states: StateSupport,
    references: ReferenceFn,
}

impl fmt::Debug for ModelSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ModelSpec")
            .field("name", &self.name)
            .field("hbar", &self.hbar)
            .field("parameters", &self.system.parameters)
            .field("states", &self.states)
            .finish()
    }
}

/// Looks up a model and checks that its states are normalized at five seeded
/// random points of its sample box.
pub fn get(name: &str, hbar: f64) -> Result<ModelSpec> {
    let spec = get_unchecked(name, hbar)?;
    spec.verify_normalization(5, 0x5eed, 1e-8)?;
    Ok(spec)
}

/// Looks up a model without the normalization check.
pub fn get_unchecked(name: &str, hbar: f64) -> Result<ModelSpec> {
    if !(hbar.is_finite() && hbar > 0.0) {
        return Err(Error::InvalidParameter(format!("hbar must be positive, got {hbar}")));
    }
    match name {
        anharmonic::NAME => anharmonic::spec(hbar),
        morse::NAME => morse::spec(hbar),
        coupled::NAME => coupled::spec(hbar),
        generalized::NAME => generalized::spec(hbar),
        flat::NAME => flat::spec(hbar),
        other => Err(Error::UnknownModel(other.to_string())),
    }
}

/// Closed-form reference for a named model.
pub fn analytic_reference(name: &str, quantity: Quantity, n: QuantumNumber, lambda: &ParameterPoint, hbar: f64) -> Result<Reference> {
    get_unchecked(name, hbar)?.analytic_reference(quantity, n, lambda)
}

impl ModelSpec {
    pub fn parameter_names(&self) -> &[String] {
        self.system.parameters.names()
    }

    pub fn num_parameters(&self) -> usize {
        self.system.num_parameters()
    }

    /// Parameter point in declaration order, checked against the domain.
    pub fn point(&self, values: &[f64]) -> Result<ParameterPoint> {
        self.system.parameters.point(values.to_vec())
    }

    pub fn supports(&self, n: QuantumNumber) -> Result<()> {
        match (self.states, n) {
            (_, QuantumNumber::Two(..)) if self.system.psi.dim() == 1 => Err(Error::InvalidParameter(format!(
                "{} is one-dimensional; got quantum number {n}",
                self.name
            ))),
            (StateSupport::GroundOnly, n) if !n.is_ground() => Err(Error::InvalidParameter(format!(
                "{} provides the ground state only; got n = {n}",
                self.name
            ))),
            _ => Ok(()),
        }
    }

    pub fn analytic_reference(&self, quantity: Quantity, n: QuantumNumber, lambda: &ParameterPoint) -> Result<Reference> {
        self.supports(n)?;
        self.system.parameters.check(lambda)?;
        (self.references)(quantity, n, lambda, self.hbar)
    }

    /// `count` admissible points drawn uniformly from the sample box.
    pub fn random_points(&self, count: usize, seed: u64) -> Vec<ParameterPoint> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut out = Vec::with_capacity(count);
        let mut attempts = 0;
        while out.len() < count && attempts < 1000 * count.max(1) {
            attempts += 1;
            let v: Vec<f64> = self.sample_box.iter().map(|&(lo, hi)| rng.gen_range(lo..hi)).collect();
            if let Ok(p) = self.point(&v) {
                out.push(p);
            }
        }
        out
    }

    pub fn verify_normalization(&self, count: usize, seed: u64, tol: f64) -> Result<()> {
        let quad = QuadratureConfig::default();
        for p in self.random_points(count, seed) {
            let dom = self.system.domain(&p);
            let n = QuantumNumber::default();
            let r = crate::types::validate_model_with(
                &self.system.metric,
                &self.system.psi,
                &dom,
                &p,
                n,
                &quad,
                &Default::default(),
            )?;
            if r.norm_deviation > tol {
                return Err(Error::NotNormalized { norm: r.norm });
            }
        }
        Ok(())
    }
}

/// Error for a quantity a model has no closed form for.
fn unavailable(model: &str, quantity: Quantity) -> Error {
    Error::NoAnalyticReference {
        model: model.into(),
        quantity: format!("{quantity:?}"),
    }
}
