//! Exponential metric `g = (λ²/4) e^{−λx}` with a Morse-like potential.
//!
//! `u = e^{−λx/2}` is the arc length from `x = +∞` (or `−∞` when `λ < 0`) and turns the
//! problem into a half-line oscillator in `u`. Only the ground state is available.

use std::f64::consts::PI;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};

use super::special::EULER_GAMMA;
use super::{unavailable, ModelSpec, Quantity, Reference, StateSupport};
use crate::domain::{Axis, Domain, ExponentialMap, Segment};
use crate::error::Result;
use crate::spectrum::{Boundary, Sector, SpectralSetup};
use crate::types::{MetricFamily, ParameterDomain, ParameterPoint, ParameterRange, QuantumNumber, QuantumSystem, WavefunctionFamily};
use crate::Complex;

pub const NAME: &str = "morse-like";
pub const PARAMS: [&str; 2] = ["lambda", "omega"];

fn amplitude(omega: f64, hbar: f64) -> f64 {
    2f64.sqrt() * (omega / (PI * hbar)).powf(0.25)
}

fn ground(x: f64, lambda: f64, omega: f64, hbar: f64) -> f64 {
    amplitude(omega, hbar) * (-(omega / (2.0 * hbar)) * (-lambda * x).exp()).exp()
}

/// Classical Hamiltonian `H = (2/λ²) e^{λx} p² + (ω²/2) e^{−λx}`.
pub fn phase_portrait_hamiltonian(x: f64, p: f64, omega: f64, lambda: f64) -> f64 {
    2.0 / (lambda * lambda) * (lambda * x).exp() * p * p + 0.5 * omega * omega * (-lambda * x).exp()
}

/// Turning point `x = −ln(2E/ω²)/λ` of the level `H = E`, if `E > 0`.
pub fn turning_point(energy: f64, omega: f64, lambda: f64) -> Option<f64> {
    (energy > 0.0 && lambda != 0.0 && omega != 0.0).then(|| -(1.0 / lambda) * (2.0 * energy / (omega * omega)).ln())
}

/// Sampled level set `H = E` of [`phase_portrait_hamiltonian`].
#[derive(Debug, Clone, PartialEq)]
pub struct LevelSet {
    pub energy: f64,
    /// Lower branch from the far end to the turning point, then the upper branch back out.
    pub points: Vec<(f64, f64)>,
    pub note: Option<String>,
}

/// The classically allowed side of the turning point is sampled over `12/|λ|`,
/// beyond which `p` is below `e^{-6}` of its scale. Points are denser near the turn.
pub fn level_set(omega: f64, lambda: f64, energy: f64, samples: usize) -> LevelSet {
    let Some(xt) = turning_point(energy, omega, lambda) else {
        return LevelSet {
            energy,
            points: Vec::new(),
            note: Some(if lambda == 0.0 {
                "lambda = 0 has no level sets".into()
            } else {
                "energy at or below the potential infimum 0".into()
            }),
        };
    };
    let span = 12.0 / lambda.abs();
    let dir = lambda.signum();
    let s = samples.max(2);
    let branch: Vec<(f64, f64)> = (0..s)
        .map(|j| {
            let t = j as f64 / (s - 1) as f64;
            let x = xt + dir * (span * t * t);
            let p2 = lambda * lambda * (-lambda * x).exp() * (energy - 0.5 * omega * omega * (-lambda * x).exp()) / 2.0;
            (x, if j == 0 { 0.0 } else { p2.max(0.0).sqrt() })
        })
        .collect();
    let mut points: Vec<(f64, f64)> = branch.iter().rev().map(|&(x, p)| (x, -p)).collect();
    points.extend(branch.iter().skip(1).copied());
    LevelSet { energy, points, note: None }
}

fn metric() -> MetricFamily {
    MetricFamily::new("(lambda^2/4) exp(-lambda x)", 1, |x, l| {
        let lam = l.get(0);
        DMatrix::from_element(1, 1, 0.25 * lam * lam * (-lam * x[0]).exp())
    })
    .with_sqrt_det(|x, l| 0.5 * l.get(0).abs() * (-0.5 * l.get(0) * x[0]).exp())
    .with_log_det_grad(|x, l, r| if r == 0 { 2.0 / l.get(0) - x[0] } else { 0.0 })
}

fn domain(lambda: f64, omega: f64, hbar: f64) -> Domain {
    let map = Arc::new(ExponentialMap { rate: 0.5 * lambda });
    Domain::custom(vec![Axis::new(vec![Segment::new(0.0, f64::INFINITY)
        .with_scale((hbar / omega).sqrt())
        .with_map(map)])])
}

pub(super) fn spec(hbar: f64) -> Result<ModelSpec> {
    let psi = WavefunctionFamily::new(NAME, 1, move |x, l, _| Complex::new(ground(x[0], l.get(0), l.get(1), hbar), 0.0))
        .with_param_grad(move |x, l, _, r| {
            let (lam, w) = (l.get(0), l.get(1));
            let e = (-lam * x[0]).exp();
            let v = ground(x[0], lam, w, hbar);
            Complex::new(
                if r == 0 {
                    v * (w / (2.0 * hbar)) * x[0] * e
                } else {
                    v * (0.25 / w - e / (2.0 * hbar))
                },
                0.0,
            )
        });
    let params = ParameterDomain::new(&PARAMS, vec![ParameterRange::nonzero(), ParameterRange::positive()]);
    let system = QuantumSystem::new(psi, metric(), params, move |l| domain(l.get(0), l.get(1), hbar))?;
    Ok(ModelSpec {
        name: NAME,
        hbar,
        system,
        potential: Some(Arc::new(|x, l| 0.5 * l.get(1).powi(2) * (-l.get(0) * x[0]).exp())),
        spectral: Some(SpectralSetup {
            map: Arc::new(|l| Arc::new(ExponentialMap { rate: 0.5 * l.get(0) })),
            potential: Arc::new(|x, l| 0.5 * l.get(1).powi(2) * (-l.get(0) * x).exp()),
            q_range: Arc::new(move |l: &ParameterPoint, levels| {
                let width = (hbar / l.get(1)).sqrt();
                (0.0, width * ((2.0 * levels as f64 + 1.0).sqrt() + 7.0))
            }),
            sectors: vec![Sector { left: Boundary::Neumann, right: Boundary::Dirichlet }],
            even_mirror: false,
        }),
        sample_box: vec![(0.5, 2.0), (0.5, 2.0)],
        states: StateSupport::GroundOnly,
        references: reference,
    })
}

/// Closed form of `G_λλ` for the ground state.
pub fn g_lambda_lambda(lambda: f64, omega: f64, hbar: f64) -> f64 {
    let g = EULER_GAMMA;
    let l4 = 4f64.ln();
    let r = omega / hbar;
    (4.0 + 2.0 * (g - 4.0) * g + PI * PI + 2.0 * l4 * l4 + 4.0 * (g - 2.0) * (4.0 * r).ln() + 2.0 * r.ln() * (16.0 * r).ln())
        / (16.0 * lambda * lambda)
}

fn reference(q: Quantity, _n: QuantumNumber, l: &ParameterPoint, hbar: f64) -> Result<Reference> {
    let (lam, w) = (l.get(0), l.get(1));
    Ok(match q {
        Quantity::QmtComponent(0, 0) => Reference::Scalar(g_lambda_lambda(lam, w, hbar)),
        Quantity::QmtComponent(1, 1) => Reference::Scalar(1.0 / (8.0 * w * w)),
        Quantity::BerryCurvature => Reference::Matrix(DMatrix::zeros(2, 2)),
        Quantity::BerryConnection => Reference::Vector(DVector::zeros(2)),
        Quantity::Energy => Reference::Scalar(0.5 * hbar * w),
        Quantity::NormConst => Reference::Scalar(amplitude(w, hbar)),
        // The mixed component needs a Meijer G-function.
        other => return Err(unavailable(NAME, other)),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hamiltonian_vanishes_nowhere_below_zero() {
        for &(x, p) in &[(0.0, 0.0), (-3.0, 2.0), (4.0, -1.0)] {
            assert!(phase_portrait_hamiltonian(x, p, 1.3, -0.7) >= 0.0);
        }
    }

    #[test]
    fn turning_point_solves_level() {
        let x = turning_point(1.0, 1.0, 1.0).unwrap();
        assert!((x + 2f64.ln()).abs() < 1e-15);
        assert!((phase_portrait_hamiltonian(x, 0.0, 1.0, 1.0) - 1.0).abs() < 1e-14);
        assert!(turning_point(0.0, 1.0, 1.0).is_none());
    }

    #[test]
    fn level_set_mirrors_under_lambda_sign() {
        let a = level_set(1.2, 0.8, 0.9, 40);
        let b = level_set(1.2, -0.8, 0.9, 40);
        assert_eq!(a.points.len(), b.points.len());
        for (p, q) in a.points.iter().zip(&b.points) {
            assert_eq!(p.0, -q.0);
            assert_eq!(p.1, q.1);
        }
        for &(x, p) in &a.points {
            assert!((phase_portrait_hamiltonian(x, p, 1.2, 0.8) - 0.9).abs() < 1e-12);
        }
    }

    #[test]
    fn log_det_gradient_matches_difference() {
        let m = metric();
        let names = ["lambda", "omega"];
        let h = 1e-6;
        for &(x, lam) in &[(0.3, 1.0), (-1.0, -0.5), (2.0, 2.0)] {
            let p = ParameterPoint::new(&names, vec![lam, 1.0]).unwrap();
            let fd = (m.log_det(&[x], &p.shifted(0, h)) - m.log_det(&[x], &p.shifted(0, -h))) / (2.0 * h);
            let g = m.analytic_log_det_grad().unwrap()(&[x], &p, 0);
            assert!((fd - g).abs() < 1e-7, "{fd} vs {g}");
        }
    }
}
