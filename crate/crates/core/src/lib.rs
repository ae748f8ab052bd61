//! Quantum geometric tensor, quantum metric, Berry connection and Berry curvature
//! for wavefunction families living on a configuration space whose metric depends
//! on the external parameters.
//!
//! The inner product is `<phi|psi> = ∫ d^N x sqrt(g) phi* psi`, and all geometric
//! objects are built from the symmetrically weighted state `g^{1/4} psi`.

pub mod diffops;
pub mod domain;
pub mod error;
pub mod fidelity;
pub mod geometry;
pub mod models;
pub mod quadrature;
pub mod spectrum;
pub mod types;

pub type Complex = num_complex::Complex64;

pub use domain::{Axis, CoordinateMap, Domain, DomainKind, ExponentialMap, IdentityMap, QuadraticMap, Segment};
pub use error::{Error, Result};
pub use types::{
    validate_model, Diagnostics, GeometricTensors, MetricFamily, ModelReport, ParameterDomain,
    ParameterPoint, ParameterRange, QuantumNumber, QuantumSystem, WavefunctionFamily,
};
