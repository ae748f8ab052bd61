//! Generalized quartic oscillator: the `g = 4λx²` family with an `xp + px` coupling.
//!
//! The states are the quartic ones at `ω = sqrt(c − b²)` times the phase
//! `e^{−ibλx⁴/(2ħ)}`, which is what gives a nonzero Berry curvature. Removing that
//! phase turns the Hamiltonian into the real quartic operator at frequency `ω`, and
//! the spectral solver works with that similar operator.

use std::f64::consts::PI;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};

use super::anharmonic::{quartic_domain, quartic_metric, quartic_spectral, quartic_state};
use super::special::hermite_norm;
use super::{unavailable, ModelSpec, Quantity, Reference, StateSupport};
use crate::error::Result;
use crate::types::{ParameterDomain, ParameterPoint, ParameterRange, QuantumNumber, QuantumSystem, WavefunctionFamily};
use crate::Complex;

pub const NAME: &str = "generalized-anharmonic";
pub const PARAMS: [&str; 3] = ["lambda", "b", "c"];

fn frequency(l: &ParameterPoint) -> f64 {
    (l.get(2) - l.get(1) * l.get(1)).sqrt()
}

pub(super) fn spec(hbar: f64) -> Result<ModelSpec> {
    let psi = WavefunctionFamily::new(NAME, 1, move |x, l, n| {
        let (lam, b) = (l.get(0), l.get(1));
        let r = quartic_state(x[0], lam, frequency(l), n.level(), hbar).value;
        Complex::from_polar(r, -b * lam * x[0].powi(4) / (2.0 * hbar))
    })
    .with_param_grad(move |x, l, n, rho| {
        let (lam, b) = (l.get(0), l.get(1));
        let w = frequency(l);
        let x4 = x[0].powi(4);
        let s = quartic_state(x[0], lam, w, n.level(), hbar);
        let phase = Complex::from_polar(1.0, -b * lam * x4 / (2.0 * hbar));
        let d = match rho {
            0 => Complex::new(s.d_lambda, -b * x4 / (2.0 * hbar) * s.value),
            1 => Complex::new(-b / w * s.d_omega, -lam * x4 / (2.0 * hbar) * s.value),
            _ => Complex::new(s.d_omega / (2.0 * w), 0.0),
        };
        phase * d
    });
    let params = ParameterDomain::new(
        &PARAMS,
        vec![ParameterRange::positive(), ParameterRange::real(), ParameterRange::positive()],
    )
    .with_joint("c - b^2 > 0", |v| v[2] - v[1] * v[1] > 0.0);
    let system = QuantumSystem::new(psi, quartic_metric(3, 0), params, move |l| {
        quartic_domain(l.get(0), frequency(l), hbar)
    })?;
    Ok(ModelSpec {
        name: NAME,
        hbar,
        system,
        potential: Some(Arc::new(|x, l| 0.5 * l.get(2) * l.get(0) * x[0].powi(4))),
        spectral: Some(quartic_spectral(hbar, 0, frequency)),
        sample_box: vec![(0.5, 2.0), (-0.6, 0.6), (0.5, 2.0)],
        states: StateSupport::AllLevels,
        references: reference,
    })
}

fn reference(q: Quantity, n: QuantumNumber, l: &ParameterPoint, hbar: f64) -> Result<Reference> {
    let (lam, b, c) = (l.get(0), l.get(1), l.get(2));
    let w = frequency(l);
    let k = n.level() as f64;
    let w2 = w * w;
    let w4 = w2 * w2;
    let g = || {
        DMatrix::from_row_slice(
            3,
            3,
            &[
                c / (8.0 * w2 * lam * lam),
                0.0,
                1.0 / (16.0 * w2 * lam),
                0.0,
                c / (8.0 * w4),
                -b / (16.0 * w4),
                1.0 / (16.0 * w2 * lam),
                -b / (16.0 * w4),
                1.0 / (32.0 * w4),
            ],
        ) * (k * k + k + 1.0)
    };
    Ok(match q {
        Quantity::Qmt => Reference::Matrix(g()),
        Quantity::QmtComponent(i, j) if i < 3 && j < 3 => Reference::Scalar(g()[(i, j)]),
        Quantity::BerryCurvature => {
            let f = DMatrix::from_row_slice(3, 3, &[0.0, 2.0 * c, -b, -2.0 * c, 0.0, -lam, b, lam, 0.0]);
            Reference::Matrix(f * ((2.0 * k + 1.0) / (16.0 * w * w2 * lam)))
        }
        Quantity::BerryConnection => {
            let m = k + 0.5;
            Reference::Vector(DVector::from_vec(vec![-b * m / (2.0 * w * lam), -m / (2.0 * w), 0.0]))
        }
        Quantity::Energy => Reference::Scalar(hbar * w * (k + 0.5)),
        Quantity::NormConst => Reference::Scalar(hermite_norm(n.level()) * (w / (PI * hbar)).powf(0.25)),
        other => return Err(unavailable(NAME, other)),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gradient_matches_finite_differences() {
        let m = spec(1.0).unwrap();
        let psi = &m.system.psi;
        let grad = psi.analytic_param_grad().unwrap();
        let p = m.point(&[1.3, 0.4, 1.1]).unwrap();
        for n in 0..3u32 {
            for x in [-0.8, 0.2, 1.1] {
                for r in 0..3 {
                    let h = 1e-6;
                    let fd = (psi.eval(&[x], &p.shifted(r, h), n.into()) - psi.eval(&[x], &p.shifted(r, -h), n.into())) / (2.0 * h);
                    let an = grad(&[x], &p, n.into(), r);
                    assert!((fd - an).norm() < 1e-7, "n={n} x={x} r={r}: {fd} vs {an}");
                }
            }
        }
    }
}
