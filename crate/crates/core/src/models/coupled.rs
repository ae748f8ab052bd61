//! Two quartic oscillators with metric `diag(a²x², b²y²)` and a quadratic coupling.
//!
//! With `X = |a|x²/2`, `Y = |b|y²/2` the measure becomes `dX dY` and the ground state
//! is a Gaussian in `(X, Y)` restricted to each quadrant:
//!
//! `Ψ = A exp[−(c₁(X² + Y²)/2 + c₂ s XY)/ħ]`, `s = sign(ab)`,
//!
//! with normal-mode frequencies `ω₊ = sqrt(k₁)`, `ω₋ = sqrt(k₁ + 2k₂)`,
//! `c₁ = (ω₊ + ω₋)/2` and `c₂ = (ω₊ − ω₋)/2`. Integrating the Gaussian over a quadrant
//! gives `A² = sqrt(ω₊ω₋)/(4ħθ)` with `θ = atan sqrt(ω₋/ω₊)` for `ab > 0` and
//! `atan sqrt(ω₊/ω₋)` otherwise.

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};

use super::{unavailable, ModelSpec, Quantity, Reference, StateSupport};
use crate::domain::{Axis, Domain, QuadraticMap, Segment};
use crate::error::{Error, Result};
use crate::types::{MetricFamily, ParameterDomain, ParameterPoint, ParameterRange, QuantumNumber, QuantumSystem, WavefunctionFamily};
use crate::Complex;

pub const NAME: &str = "coupled-anharmonic-2d";
pub const PARAMS: [&str; 4] = ["k1", "k2", "a", "b"];

struct Modes {
    wp: f64,
    wm: f64,
    c1: f64,
    c2: f64,
    s: f64,
    amp: f64,
    /// `∂ ln A / ∂ω₊`, `∂ ln A / ∂ω₋`
    dlna: [f64; 2],
}

impl Modes {
    fn new(k1: f64, k2: f64, a: f64, b: f64, hbar: f64) -> Self {
        let wp = k1.sqrt();
        let wm = (k1 + 2.0 * k2).sqrt();
        let s = (a * b).signum();
        let (r, dr) = if s > 0.0 {
            (wm / wp, [-wm / (wp * wp), 1.0 / wp])
        } else {
            (wp / wm, [1.0 / wm, -wp / (wm * wm)])
        };
        let theta = r.sqrt().atan();
        let dtheta = 1.0 / ((1.0 + r) * 2.0 * r.sqrt());
        let amp = ((wp * wm).sqrt() / (4.0 * hbar * theta)).sqrt();
        let dlna = [
            0.25 / wp - 0.5 / theta * dtheta * dr[0],
            0.25 / wm - 0.5 / theta * dtheta * dr[1],
        ];
        Self {
            wp,
            wm,
            c1: 0.5 * (wp + wm),
            c2: 0.5 * (wp - wm),
            s,
            amp,
            dlna,
        }
    }
}

fn check(k1: f64, k2: f64, a: f64, b: f64) -> Result<()> {
    let ok = [k1, k2, a, b].iter().all(|v| v.is_finite()) && k1 > 0.0 && k1 + 2.0 * k2 > 0.0 && a != 0.0 && b != 0.0;
    if ok {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!(
            "need k1 > 0, k1 + 2 k2 > 0, a != 0, b != 0; got ({k1}, {k2}, {a}, {b})"
        )))
    }
}

fn value(x: f64, y: f64, l: [f64; 4], hbar: f64) -> f64 {
    let m = Modes::new(l[0], l[1], l[2], l[3], hbar);
    let (xx, yy) = (0.5 * l[2].abs() * x * x, 0.5 * l[3].abs() * y * y);
    m.amp * (-(m.c1 * (xx * xx + yy * yy) / 2.0 + m.c2 * m.s * xx * yy) / hbar).exp()
}

/// Ground state `Ψ₀(x, y)` at `(k1, k2, a, b)`.
pub fn coupled_ground_state(x: f64, y: f64, params: [f64; 4], hbar: f64) -> Result<f64> {
    check(params[0], params[1], params[2], params[3])?;
    Ok(value(x, y, params, hbar))
}

/// `V = k₁(a²x⁴ + b²y⁴)/8 + k₂(ax²/2 − by²/2)²/2`.
pub fn coupled_potential(x: f64, y: f64, params: [f64; 4]) -> f64 {
    let [k1, k2, a, b] = params;
    let d = 0.5 * a * x * x - 0.5 * b * y * y;
    k1 * (a * a * x.powi(4) + b * b * y.powi(4)) / 8.0 + 0.5 * k2 * d * d
}

fn params_of(l: &ParameterPoint) -> [f64; 4] {
    [l.get(0), l.get(1), l.get(2), l.get(3)]
}

fn gradient(x: f64, y: f64, l: [f64; 4], hbar: f64, rho: usize) -> f64 {
    let [k1, k2, a, b] = l;
    let m = Modes::new(k1, k2, a, b, hbar);
    let psi = value(x, y, l, hbar);
    match rho {
        0 | 1 => {
            let (xx, yy) = (0.5 * a.abs() * x * x, 0.5 * b.abs() * y * y);
            let q = 0.25 * (xx * xx + yy * yy);
            let c = 0.5 * m.s * xx * yy;
            let de = [-(q + c) / hbar, -(q - c) / hbar];
            let dw = if rho == 0 {
                [0.5 / m.wp, 0.5 / m.wm]
            } else {
                [0.0, 1.0 / m.wm]
            };
            psi * ((m.dlna[0] + de[0]) * dw[0] + (m.dlna[1] + de[1]) * dw[1])
        }
        2 => -psi * (m.c1 * a * x.powi(4) + m.c2 * b * x * x * y * y) / (4.0 * hbar),
        _ => -psi * (m.c1 * b * y.powi(4) + m.c2 * a * x * x * y * y) / (4.0 * hbar),
    }
}

fn metric() -> MetricFamily {
    MetricFamily::new("diag(a^2 x^2, b^2 y^2)", 2, |x, l| {
        let (a, b) = (l.get(2), l.get(3));
        DMatrix::from_diagonal(&DVector::from_vec(vec![a * a * x[0] * x[0], b * b * x[1] * x[1]]))
    })
    .with_sqrt_det(|x, l| (l.get(2) * l.get(3) * x[0] * x[1]).abs())
    .with_log_det_grad(|_, l, r| match r {
        2 => 2.0 / l.get(2),
        3 => 2.0 / l.get(3),
        _ => 0.0,
    })
}

fn axis(coeff: f64, scale: f64) -> Axis {
    let map = Arc::new(QuadraticMap { coeff });
    Axis::new(vec![
        Segment::new(f64::NEG_INFINITY, 0.0).with_scale(scale).with_map(map.clone()),
        Segment::new(0.0, f64::INFINITY).with_scale(scale).with_map(map),
    ])
}

fn domain(l: &ParameterPoint, hbar: f64) -> Domain {
    let m = Modes::new(l.get(0), l.get(1), l.get(2), l.get(3), hbar);
    let scale = (hbar / m.c1).sqrt();
    Domain::custom(vec![axis(0.5 * l.get(2).abs(), scale), axis(0.5 * l.get(3).abs(), scale)])
}

pub(super) fn spec(hbar: f64) -> Result<ModelSpec> {
    let psi = WavefunctionFamily::new(NAME, 2, move |x, l, _| Complex::new(value(x[0], x[1], params_of(l), hbar), 0.0))
        .with_param_grad(move |x, l, _, r| Complex::new(gradient(x[0], x[1], params_of(l), hbar, r), 0.0));
    let params = ParameterDomain::new(
        &PARAMS,
        vec![
            ParameterRange::positive(),
            ParameterRange::real(),
            ParameterRange::nonzero(),
            ParameterRange::nonzero(),
        ],
    )
    .with_joint("k1 + 2 k2 > 0", |v| v[0] + 2.0 * v[1] > 0.0);
    let system = QuantumSystem::new(psi, metric(), params, move |l| domain(l, hbar))?;
    Ok(ModelSpec {
        name: NAME,
        hbar,
        system,
        potential: Some(Arc::new(|x, l| coupled_potential(x[0], x[1], params_of(l)))),
        spectral: None,
        sample_box: vec![(0.5, 2.0), (0.05, 1.0), (0.5, 2.0), (0.5, 2.0)],
        states: StateSupport::GroundOnly,
        references: reference,
    })
}

fn reference(q: Quantity, _n: QuantumNumber, l: &ParameterPoint, hbar: f64) -> Result<Reference> {
    let m = Modes::new(l.get(0), l.get(1), l.get(2), l.get(3), hbar);
    Ok(match q {
        Quantity::BerryCurvature => Reference::Matrix(DMatrix::zeros(4, 4)),
        Quantity::BerryConnection => Reference::Vector(DVector::zeros(4)),
        Quantity::Energy => Reference::Scalar(0.5 * hbar * (m.wp + m.wm)),
        Quantity::NormConst => Reference::Scalar(m.amp),
        other => return Err(unavailable(NAME, other)),
    })
}
