//! Fidelity route to the quantum metric.
//!
//! The overlap of two weighted states is
//! `F(λ', λ) = ∫ g(λ')^{1/4} g(λ)^{1/4} ψ*(λ') ψ(λ) dx`, and for a small displacement
//! `|F(λ + δλ, λ)| = 1 − ½ χ_ρκ δλ^ρ δλ^κ + O(δ³)` with `χ = G`. Averaging `±δλ`
//! removes the odd orders; the surviving quadratic coefficient is read off along
//! coordinate directions and, for off-diagonals, along `e_ρ ± e_κ`.

use nalgebra::DMatrix;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::quadrature::{self, QuadratureConfig};
use crate::types::{ParameterPoint, QuantumNumber, QuantumSystem};
use crate::Complex;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Extrapolation {
    None,
    /// Polynomial extrapolation in `δ²` to `δ = 0` through all steps.
    #[default]
    RichardsonDeltaSquared,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SusceptibilityConfig {
    /// Step magnitudes; parameter `ρ` moves by `δ max(1, |λ_ρ|)`.
    pub delta_steps: Vec<f64>,
    pub extrapolation: Extrapolation,
    /// Largest tolerated disagreement between the full extrapolation and the
    /// one from the two smallest steps, relative to `max(1, ‖χ‖)`.
    pub fit_threshold: f64,
    pub quad: QuadratureConfig,
}

impl Default for SusceptibilityConfig {
    fn default() -> Self {
        Self {
            delta_steps: vec![1e-2, 5e-3, 2.5e-3],
            extrapolation: Extrapolation::default(),
            fit_threshold: 1e-3,
            quad: QuadratureConfig::default(),
        }
    }
}

impl SusceptibilityConfig {
    pub fn validate(&self) -> Result<()> {
        if self.delta_steps.is_empty() || self.delta_steps.iter().any(|d| !(d.is_finite() && *d > 0.0)) {
            return Err(Error::InvalidConfig(format!("delta_steps must be positive, got {:?}", self.delta_steps)));
        }
        let mut sorted = self.delta_steps.clone();
        sorted.sort_by(f64::total_cmp);
        if sorted.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::InvalidConfig("delta_steps must be distinct".into()));
        }
        self.quad.validate()
    }
}

/// `<g^{1/4}(λ')ψ(λ') | g^{1/4}(λ)ψ(λ)>`.
pub fn overlap(
    sys: &QuantumSystem,
    lambda: &ParameterPoint,
    shifted: &ParameterPoint,
    n: QuantumNumber,
    quad: &QuadratureConfig,
) -> Result<Complex> {
    sys.parameters.check(lambda)?;
    sys.parameters.check(shifted)?;
    let domain = sys.domain(lambda);
    let metric = &sys.metric;
    let psi = &sys.psi;
    let r = quadrature::integrate(
        |x| {
            let w = (metric.sqrt_det(x, shifted) * metric.sqrt_det(x, lambda)).sqrt();
            if w == 0.0 {
                return Complex::new(0.0, 0.0);
            }
            psi.eval(x, shifted, n).conj() * psi.eval(x, lambda, n) * w
        },
        &domain,
        quad,
    )?;
    Ok(r.value)
}

#[derive(Debug, Clone, PartialEq)]
pub struct Susceptibility {
    pub chi: DMatrix<f64>,
    /// Raw estimate at each configured step, in the configured order.
    pub per_step: Vec<DMatrix<f64>>,
    /// Largest `|(|F(+d)| − |F(−d)|)| / (2δ)` over the stencil; zero in exact arithmetic.
    pub linear_term: f64,
    pub fit_residual: f64,
}

/// Estimates `χ` from fidelities on the displacement stencil.
pub fn fidelity_susceptibility(
    sys: &QuantumSystem,
    lambda: &ParameterPoint,
    n: QuantumNumber,
    cfg: &SusceptibilityConfig,
) -> Result<Susceptibility> {
    cfg.validate()?;
    sys.parameters.check(lambda)?;
    let m = lambda.dim();
    let scale: Vec<f64> = lambda.values().iter().map(|v| v.abs().max(1.0)).collect();

    // Directions as sparse (index, coefficient) lists.
    let mut dirs: Vec<Vec<(usize, f64)>> = (0..m).map(|r| vec![(r, 1.0)]).collect();
    for r in 0..m {
        for k in r + 1..m {
            dirs.push(vec![(r, 1.0), (k, 1.0)]);
            dirs.push(vec![(r, 1.0), (k, -1.0)]);
        }
    }
    let mut jobs = Vec::new();
    for (si, &delta) in cfg.delta_steps.iter().enumerate() {
        for (di, dir) in dirs.iter().enumerate() {
            for sign in [1.0, -1.0] {
                let mut d = vec![0.0; m];
                for &(i, c) in dir {
                    d[i] = sign * c * delta * scale[i];
                }
                let p = lambda.displaced(&d);
                if !sys.parameters.contains(&p) {
                    let i = dir[0].0;
                    return Err(Error::StepOutsideDomain {
                        name: lambda.names()[i].clone(),
                        value: lambda.get(i),
                        step: delta * scale[i],
                    });
                }
                jobs.push((si, di, p));
            }
        }
    }
    let fidelities: Vec<f64> = jobs
        .par_iter()
        .map(|(_, _, p)| overlap(sys, lambda, p, n, &cfg.quad).map(|c| c.norm()))
        .collect::<Result<_>>()?;

    let nd = dirs.len();
    let mut per_step = Vec::with_capacity(cfg.delta_steps.len());
    let mut linear_term = 0.0f64;
    for (si, &delta) in cfg.delta_steps.iter().enumerate() {
        let q: Vec<f64> = (0..nd)
            .map(|di| {
                let base = 2 * (si * nd + di);
                let (fp, fm) = (fidelities[base], fidelities[base + 1]);
                linear_term = linear_term.max((fp - fm).abs() / (2.0 * delta));
                (2.0 - fp - fm) / (delta * delta)
            })
            .collect();
        let mut chi = DMatrix::zeros(m, m);
        for r in 0..m {
            chi[(r, r)] = q[r] / (scale[r] * scale[r]);
        }
        let mut idx = m;
        for r in 0..m {
            for k in r + 1..m {
                let v = (q[idx] - q[idx + 1]) / (4.0 * scale[r] * scale[k]);
                chi[(r, k)] = v;
                chi[(k, r)] = v;
                idx += 2;
            }
        }
        per_step.push(chi);
    }

    let (chi, fit_residual) = match cfg.extrapolation {
        Extrapolation::None => {
            let smallest = smallest_index(&cfg.delta_steps);
            (per_step[smallest].clone(), 0.0)
        }
        Extrapolation::RichardsonDeltaSquared => {
            let h2: Vec<f64> = cfg.delta_steps.iter().map(|d| d * d).collect();
            let full = neville_at_zero(&h2, &per_step);
            if h2.len() >= 3 {
                let mut order: Vec<usize> = (0..h2.len()).collect();
                order.sort_by(|&a, &b| h2[a].total_cmp(&h2[b]));
                let sub_h: Vec<f64> = order[..2].iter().map(|&i| h2[i]).collect();
                let sub_v: Vec<DMatrix<f64>> = order[..2].iter().map(|&i| per_step[i].clone()).collect();
                let partial = neville_at_zero(&sub_h, &sub_v);
                let res = (&full - &partial).amax() / full.amax().max(1.0);
                (full, res)
            } else {
                (full, 0.0)
            }
        }
    };
    if fit_residual > cfg.fit_threshold {
        return Err(Error::FitResidual {
            residual: fit_residual,
            threshold: cfg.fit_threshold,
        });
    }
    Ok(Susceptibility {
        chi,
        per_step,
        linear_term,
        fit_residual,
    })
}

fn smallest_index(steps: &[f64]) -> usize {
    (0..steps.len()).min_by(|&a, &b| steps[a].total_cmp(&steps[b])).unwrap_or(0)
}

/// Value at `h = 0` of the polynomial through `(h_i, v_i)`.
fn neville_at_zero(h: &[f64], v: &[DMatrix<f64>]) -> DMatrix<f64> {
    let mut p: Vec<DMatrix<f64>> = v.to_vec();
    let k = h.len();
    for level in 1..k {
        for i in 0..k - level {
            let j = i + level;
            p[i] = (&p[i + 1] * h[i] - &p[i] * h[j]) / (h[i] - h[j]);
        }
    }
    p.swap_remove(0)
}
