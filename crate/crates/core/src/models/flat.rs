//! Ordinary harmonic oscillator on the flat line, parameterized by `ω`.
//!
//! Serves as a control: `σ = 0`, so every curved correction must vanish and the
//! metric reduces to the textbook `G_ωω = (n² + n + 1)/(8ω²)`.

use std::f64::consts::PI;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};

use super::special::{hermite, hermite_derivative, hermite_norm};
use super::{unavailable, ModelSpec, Quantity, Reference, StateSupport};
use crate::domain::{Domain, IdentityMap};
use crate::error::Result;
use crate::spectrum::{Boundary, Sector, SpectralSetup};
use crate::types::{MetricFamily, ParameterDomain, ParameterPoint, ParameterRange, QuantumNumber, QuantumSystem, WavefunctionFamily};
use crate::Complex;

pub const NAME: &str = "flat-oscillator";
pub const PARAMS: [&str; 1] = ["omega"];

fn state(x: f64, omega: f64, n: u32, hbar: f64) -> (f64, f64) {
    let z = (omega / hbar).sqrt() * x;
    let norm = hermite_norm(n) * (omega / (PI * hbar)).powf(0.25);
    let e = (-omega * x * x / (2.0 * hbar)).exp();
    let v = norm * e * hermite(n, z);
    let d = v * (0.25 / omega - x * x / (2.0 * hbar)) + norm * e * hermite_derivative(n, z) * z / (2.0 * omega);
    (v, d)
}

pub(super) fn spec(hbar: f64) -> Result<ModelSpec> {
    let psi = WavefunctionFamily::new(NAME, 1, move |x, l, n| Complex::new(state(x[0], l.get(0), n.level(), hbar).0, 0.0))
        .with_param_grad(move |x, l, n, _| Complex::new(state(x[0], l.get(0), n.level(), hbar).1, 0.0));
    let params = ParameterDomain::new(&PARAMS, vec![ParameterRange::positive()]);
    let system = QuantumSystem::new(psi, MetricFamily::flat(1), params, move |l| {
        Domain::full_line((hbar / l.get(0)).sqrt())
    })?;
    Ok(ModelSpec {
        name: NAME,
        hbar,
        system,
        potential: Some(Arc::new(|x, l| 0.5 * l.get(0).powi(2) * x[0] * x[0])),
        spectral: Some(SpectralSetup {
            map: Arc::new(|_| Arc::new(IdentityMap)),
            potential: Arc::new(|x, l| 0.5 * l.get(0).powi(2) * x * x),
            q_range: Arc::new(move |l: &ParameterPoint, levels| {
                let half = (hbar / l.get(0)).sqrt() * ((2.0 * levels as f64 + 1.0).sqrt() + 7.0);
                (-half, half)
            }),
            sectors: vec![Sector { left: Boundary::Dirichlet, right: Boundary::Dirichlet }],
            even_mirror: false,
        }),
        sample_box: vec![(0.5, 3.0)],
        states: StateSupport::AllLevels,
        references: reference,
    })
}

fn reference(q: Quantity, n: QuantumNumber, l: &ParameterPoint, hbar: f64) -> Result<Reference> {
    let w = l.get(0);
    let k = n.level() as f64;
    let g = (k * k + k + 1.0) / (8.0 * w * w);
    Ok(match q {
        Quantity::Qmt => Reference::Matrix(DMatrix::from_element(1, 1, g)),
        Quantity::QmtComponent(0, 0) => Reference::Scalar(g),
        Quantity::BerryCurvature => Reference::Matrix(DMatrix::zeros(1, 1)),
        Quantity::BerryConnection => Reference::Vector(DVector::zeros(1)),
        Quantity::Energy => Reference::Scalar(hbar * w * (k + 0.5)),
        Quantity::NormConst => Reference::Scalar(hermite_norm(n.level()) * (w / (PI * hbar)).powf(0.25)),
        other => return Err(unavailable(NAME, other)),
    })
}
