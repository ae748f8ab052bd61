//! Quartic oscillator on the line with metric `g = 4λx²`.
//!
//! In the arc-length variable `u = sign(x) sqrt(λ) x²` the problem is the ordinary
//! harmonic oscillator, which is where the closed-form states come from.

use std::f64::consts::PI;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};

use super::special::{hermite, hermite_derivative, hermite_norm};
use super::{unavailable, ModelSpec, Quantity, Reference, StateSupport};
use crate::domain::{Axis, Domain, QuadraticMap, Segment};
use crate::error::Result;
use crate::spectrum::{Boundary, Sector, SpectralSetup};
use crate::types::{MetricFamily, ParameterDomain, ParameterPoint, ParameterRange, QuantumNumber, QuantumSystem, WavefunctionFamily};
use crate::Complex;

pub const NAME: &str = "anharmonic-1d";
pub const PARAMS: [&str; 2] = ["lambda", "omega"];

/// `ψ_n` of the quartic oscillator and its derivatives in `λ` and `ω`.
#[derive(Debug, Clone, Copy)]
pub(crate) struct QuarticState {
    pub value: f64,
    pub d_lambda: f64,
    pub d_omega: f64,
}

pub(crate) fn quartic_state(x: f64, lambda: f64, omega: f64, n: u32, hbar: f64) -> QuarticState {
    let x2 = x * x;
    let x4 = x2 * x2;
    let z = (omega * lambda / hbar).sqrt() * x2;
    let norm = hermite_norm(n) * (omega / (PI * hbar)).powf(0.25);
    let e = (-omega * lambda * x4 / (2.0 * hbar)).exp();
    let h = hermite(n, z);
    let dh = hermite_derivative(n, z);
    let value = norm * e * h;
    QuarticState {
        value,
        d_lambda: value * (-omega * x4 / (2.0 * hbar)) + norm * e * dh * z / (2.0 * lambda),
        d_omega: value * (0.25 / omega - lambda * x4 / (2.0 * hbar)) + norm * e * dh * z / (2.0 * omega),
    }
}

/// `g = 4λx²` with `sqrt g = 2 sqrt(λ) |x|`; `λ` is parameter `lambda_index`.
pub(crate) fn quartic_metric(m: usize, lambda_index: usize) -> MetricFamily {
    MetricFamily::new("4 lambda x^2", 1, move |x, l| DMatrix::from_element(1, 1, 4.0 * l.get(lambda_index) * x[0] * x[0]))
        .with_sqrt_det(move |x, l| 2.0 * l.get(lambda_index).sqrt() * x[0].abs())
        .with_log_det_grad(move |_, l, r| {
            debug_assert!(r < m);
            if r == lambda_index {
                1.0 / l.get(lambda_index)
            } else {
                0.0
            }
        })
}

/// Both half-lines, each mapped to a Gaussian-type integral in `u = sqrt(λ) x²`.
pub(crate) fn quartic_domain(lambda: f64, omega: f64, hbar: f64) -> Domain {
    let map = Arc::new(QuadraticMap { coeff: lambda.sqrt() });
    let scale = (hbar / omega).sqrt();
    Domain::custom(vec![Axis::new(vec![
        Segment::new(f64::NEG_INFINITY, 0.0).with_scale(scale).with_map(map.clone()),
        Segment::new(0.0, f64::INFINITY).with_scale(scale).with_map(map),
    ])])
}

/// Spectral problem of the quartic family in `u`, with frequency `omega_of(λ)`.
pub(crate) fn quartic_spectral<F>(hbar: f64, lambda_index: usize, omega_of: F) -> SpectralSetup
where
    F: Fn(&ParameterPoint) -> f64 + Send + Sync + Clone + 'static,
{
    let w1 = omega_of.clone();
    let w2 = omega_of;
    SpectralSetup {
        map: Arc::new(move |l| Arc::new(QuadraticMap { coeff: l.get(lambda_index).sqrt() })),
        potential: Arc::new(move |x, l| {
            let w = w1(l);
            0.5 * w * w * l.get(lambda_index) * x.powi(4)
        }),
        q_range: Arc::new(move |l, levels| {
            let width = (hbar / w2(l)).sqrt();
            (0.0, width * ((2.0 * levels as f64 + 1.0).sqrt() + 7.0))
        }),
        sectors: vec![
            Sector { left: Boundary::Neumann, right: Boundary::Dirichlet },
            Sector { left: Boundary::Dirichlet, right: Boundary::Dirichlet },
        ],
        even_mirror: true,
    }
}

pub(super) fn spec(hbar: f64) -> Result<ModelSpec> {
    let psi = WavefunctionFamily::new(NAME, 1, move |x, l, n| {
        Complex::new(quartic_state(x[0], l.get(0), l.get(1), n.level(), hbar).value, 0.0)
    })
    .with_param_grad(move |x, l, n, r| {
        let s = quartic_state(x[0], l.get(0), l.get(1), n.level(), hbar);
        Complex::new(if r == 0 { s.d_lambda } else { s.d_omega }, 0.0)
    });
    let params = ParameterDomain::new(&PARAMS, vec![ParameterRange::positive(), ParameterRange::positive()]);
    let system = QuantumSystem::new(psi, quartic_metric(2, 0), params, move |l| quartic_domain(l.get(0), l.get(1), hbar))?;
    Ok(ModelSpec {
        name: NAME,
        hbar,
        system,
        potential: Some(Arc::new(|x, l| 0.5 * l.get(1).powi(2) * l.get(0) * x[0].powi(4))),
        spectral: Some(quartic_spectral(hbar, 0, |l: &ParameterPoint| l.get(1))),
        sample_box: vec![(0.5, 2.0), (0.5, 3.0)],
        states: StateSupport::AllLevels,
        references: reference,
    })
}

fn reference(q: Quantity, n: QuantumNumber, l: &ParameterPoint, hbar: f64) -> Result<Reference> {
    let (lam, w) = (l.get(0), l.get(1));
    let k = n.level() as f64;
    let deg = k * k + k + 1.0;
    let g = || {
        DMatrix::from_row_slice(
            2,
            2,
            &[
                1.0 / (8.0 * lam * lam),
                1.0 / (8.0 * lam * w),
                1.0 / (8.0 * lam * w),
                1.0 / (8.0 * w * w),
            ],
        ) * deg
    };
    Ok(match q {
        Quantity::Qmt => Reference::Matrix(g()),
        Quantity::QmtComponent(i, j) if i < 2 && j < 2 => Reference::Scalar(g()[(i, j)]),
        Quantity::BerryCurvature => Reference::Matrix(DMatrix::zeros(2, 2)),
        Quantity::BerryConnection => Reference::Vector(DVector::zeros(2)),
        Quantity::Energy => Reference::Scalar(hbar * w * (k + 0.5)),
        Quantity::NormConst => Reference::Scalar(hermite_norm(n.level()) * (w / (PI * hbar)).powf(0.25)),
        other => return Err(unavailable(NAME, other)),
    })
}
