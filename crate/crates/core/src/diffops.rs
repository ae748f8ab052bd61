//! Finite differences with respect to the parameters `λ_ρ`.

use std::ops::{Add, Mul, Sub};

use crate::error::{Error, Result};
use crate::types::{MetricFamily, ParameterDomain, ParameterPoint, QuantumNumber, WavefunctionFamily};
use crate::Complex;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum FdScheme {
    Central2,
    #[default]
    Central4,
    /// Central differences at `h, h/2, h/4` combined by two Richardson steps.
    Richardson,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FdConfig {
    pub base_step: f64,
    pub scheme: FdScheme,
    /// Fall back to a second-order one-sided stencil when the central one would
    /// leave the parameter domain. Off unless asked for.
    pub allow_one_sided: bool,
}

impl Default for FdConfig {
    fn default() -> Self {
        Self {
            base_step: 1e-4,
            scheme: FdScheme::Central4,
            allow_one_sided: false,
        }
    }
}

impl FdConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.base_step > 0.0 && self.base_step.is_finite()) {
            return Err(Error::InvalidConfig("base_step must be positive".into()));
        }
        Ok(())
    }

    /// `h_ρ = base_step · max(1, |λ_ρ|)`.
    pub fn step(&self, lambda: &ParameterPoint, rho: usize) -> f64 {
        self.base_step * lambda.get(rho).abs().max(1.0)
    }

    pub fn steps(&self, lambda: &ParameterPoint) -> Vec<f64> {
        (0..lambda.dim()).map(|r| self.step(lambda, r)).collect()
    }

    fn reach(&self) -> f64 {
        match self.scheme {
            FdScheme::Central2 | FdScheme::Richardson => 1.0,
            FdScheme::Central4 => 2.0,
        }
    }

    pub(crate) fn key(&self) -> [u64; 3] {
        [self.base_step.to_bits(), self.scheme as u64, self.allow_one_sided as u64]
    }
}

/// `∂f/∂λ_ρ` for any value type supporting linear combinations.
pub fn derivative<T, F>(f: F, lambda: &ParameterPoint, rho: usize, params: &ParameterDomain, cfg: &FdConfig) -> Result<T>
where
    T: Clone + Add<Output = T> + Sub<Output = T> + Mul<f64, Output = T>,
    F: Fn(&ParameterPoint) -> T,
{
    cfg.validate()?;
    let h = cfg.step(lambda, rho);
    let v = lambda.get(rho);
    let at = |d: f64| f(&lambda.with_value(rho, v + d));
    let r = cfg.reach() * h;
    if !params.segment_admissible(lambda, rho, v - r, v + r) {
        if cfg.allow_one_sided {
            for dir in [1.0, -1.0] {
                if params.segment_admissible(lambda, rho, v, v + dir * 2.0 * h) {
                    let d = dir * h;
                    // (-3 f0 + 4 f1 - f2) / (2d)
                    return Ok((at(d) * 4.0 - at(0.0) * 3.0 - at(2.0 * d)) * (0.5 / d));
                }
            }
        }
        return Err(Error::StepOutsideDomain {
            name: params.names().get(rho).cloned().unwrap_or_else(|| format!("#{rho}")),
            value: v,
            step: h,
        });
    }
    let central = |h: f64| (at(h) - at(-h)) * (0.5 / h);
    Ok(match cfg.scheme {
        FdScheme::Central2 => central(h),
        FdScheme::Central4 => {
            (at(h) * 8.0 - at(-h) * 8.0 - at(2.0 * h) + at(-2.0 * h)) * (1.0 / (12.0 * h))
        }
        FdScheme::Richardson => {
            let d0 = central(h);
            let d1 = central(0.5 * h);
            let d2 = central(0.25 * h);
            let r1 = (d1.clone() * 4.0 - d0) * (1.0 / 3.0);
            let r2 = (d2 * 4.0 - d1) * (1.0 / 3.0);
            (r2 * 16.0 - r1) * (1.0 / 15.0)
        }
    })
}

/// `∂ψ_n/∂λ_ρ`, analytic when the family provides it.
pub fn d_psi(
    psi: &WavefunctionFamily,
    n: QuantumNumber,
    x: &[f64],
    lambda: &ParameterPoint,
    rho: usize,
    params: &ParameterDomain,
    cfg: &FdConfig,
) -> Result<Complex> {
    match psi.analytic_param_grad() {
        Some(g) => Ok(g(x, lambda, n, rho)),
        None => d_psi_fd(psi, n, x, lambda, rho, params, cfg),
    }
}

/// Finite-difference `∂ψ_n/∂λ_ρ`, ignoring any analytic derivative.
pub fn d_psi_fd(
    psi: &WavefunctionFamily,
    n: QuantumNumber,
    x: &[f64],
    lambda: &ParameterPoint,
    rho: usize,
    params: &ParameterDomain,
    cfg: &FdConfig,
) -> Result<Complex> {
    derivative(|l| psi.eval(x, l, n), lambda, rho, params, cfg)
}

/// `∂_ρ ln det g`, analytic when the metric provides it.
pub fn d_log_det_g(
    metric: &MetricFamily,
    x: &[f64],
    lambda: &ParameterPoint,
    rho: usize,
    params: &ParameterDomain,
    cfg: &FdConfig,
) -> Result<f64> {
    match metric.analytic_log_det_grad() {
        Some(f) => Ok(f(x, lambda, rho)),
        None => d_log_det_g_fd(metric, x, lambda, rho, params, cfg),
    }
}

pub fn d_log_det_g_fd(
    metric: &MetricFamily,
    x: &[f64],
    lambda: &ParameterPoint,
    rho: usize,
    params: &ParameterDomain,
    cfg: &FdConfig,
) -> Result<f64> {
    derivative(|l| metric.log_det(x, l), lambda, rho, params, cfg)
}

/// `σ_ρ = −∂_ρ ln det g`.
pub fn sigma(
    metric: &MetricFamily,
    x: &[f64],
    lambda: &ParameterPoint,
    rho: usize,
    params: &ParameterDomain,
    cfg: &FdConfig,
) -> Result<f64> {
    Ok(-d_log_det_g(metric, x, lambda, rho, params, cfg)?)
}

/// `σ_ρ = g_{μν} ∂_ρ g^{μν}`, differencing the inverse metric entrywise.
pub fn sigma_via_inverse(
    metric: &MetricFamily,
    x: &[f64],
    lambda: &ParameterPoint,
    rho: usize,
    params: &ParameterDomain,
    cfg: &FdConfig,
) -> Result<f64> {
    let inv = |l: &ParameterPoint| {
        metric
            .tensor(x, l)
            .try_inverse()
            .ok_or_else(|| Error::MetricNotPositiveDefinite { x: x.to_vec() })
    };
    inv(lambda)?;
    let d_inv = derivative(|l| inv(l).unwrap_or_else(|_| nalgebra::DMatrix::from_element(metric.dim(), metric.dim(), f64::NAN)), lambda, rho, params, cfg)?;
    let g = metric.tensor(x, lambda);
    let s = g.component_mul(&d_inv).sum();
    if !s.is_finite() {
        return Err(Error::NonFiniteSigma { parameter: rho, x: x.to_vec() });
    }
    Ok(s)
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::DMatrix;

    fn point(v: &[f64]) -> (ParameterPoint, ParameterDomain) {
        let names: Vec<String> = (0..v.len()).map(|i| format!("p{i}")).collect();
        (ParameterPoint::new(&names, v.to_vec()).unwrap(), ParameterDomain::unbounded(&names))
    }

    #[test]
    fn step_scales_with_parameter() {
        let (p, _) = point(&[0.3, -20.0]);
        let cfg = FdConfig::default();
        assert_eq!(cfg.step(&p, 0), 1e-4);
        assert!((cfg.step(&p, 1) - 2e-3).abs() < 1e-18);
    }

    #[test]
    fn fourth_order_convergence() {
        let (p, d) = point(&[0.0]);
        let hs = [1e-2, 5e-3, 2.5e-3];
        let errs: Vec<f64> = hs
            .iter()
            .map(|&h| {
                let cfg = FdConfig {
                    base_step: h,
                    scheme: FdScheme::Central4,
                    allow_one_sided: false,
                };
                (derivative(|l| l.get(0).exp(), &p, 0, &d, &cfg).unwrap() - 1.0).abs()
            })
            .collect();
        for w in errs.windows(2) {
            let order = (w[0] / w[1]).log2();
            assert!(order >= 3.7, "observed order {order} from {errs:?}");
        }
    }

    #[test]
    fn richardson_is_accurate() {
        let (p, d) = point(&[0.7]);
        let cfg = FdConfig {
            base_step: 1e-2,
            scheme: FdScheme::Richardson,
            allow_one_sided: false,
        };
        let v = derivative(|l| l.get(0).sin(), &p, 0, &d, &cfg).unwrap();
        assert!((v - 0.7f64.cos()).abs() < 1e-11);
    }

    #[test]
    fn boundary_requires_opt_in() {
        let names = ["lambda"];
        let d = ParameterDomain::new(&names, vec![crate::types::ParameterRange::positive()]);
        let p = ParameterPoint::new(&names, vec![5e-5]).unwrap();
        let err = derivative(|l| l.get(0).ln(), &p, 0, &d, &FdConfig::default()).unwrap_err();
        assert!(matches!(err, Error::StepOutsideDomain { .. }));
        let cfg = FdConfig {
            base_step: 1e-6,
            allow_one_sided: true,
            ..Default::default()
        };
        let p = ParameterPoint::new(&names, vec![1e-6]).unwrap();
        let v = derivative(|l| l.get(0) * l.get(0), &p, 0, &d, &cfg).unwrap();
        assert!((v - 2e-6).abs() < 1e-12);
    }

    #[test]
    fn parameter_free_function_has_zero_derivative() {
        let (p, d) = point(&[1.0, 2.0]);
        let psi = WavefunctionFamily::new("const", 1, |x, l, _| Complex::new((-x[0] * x[0] * l.get(0)).exp(), 0.0));
        let v = d_psi(&psi, 0.into(), &[0.3], &p, 1, &d, &FdConfig::default()).unwrap();
        assert!(v.norm() < 1e-10);
    }

    #[test]
    fn sigma_two_routes_on_a_2d_metric() {
        let metric = MetricFamily::new("aniso", 2, |x, l| {
            let a = l.get(0);
            let b = l.get(1);
            DMatrix::from_row_slice(2, 2, &[a * a + x[1] * x[1], a * b * x[0], a * b * x[0], 1.0 + b * b * x[0] * x[0]])
        });
        let (p, d) = point(&[0.8, 1.3]);
        let cfg = FdConfig::default();
        for x in [[0.1, 0.2], [-0.5, 1.5], [2.0, -0.3]] {
            for rho in 0..2 {
                let a = sigma(&metric, &x, &p, rho, &d, &cfg).unwrap();
                let b = sigma_via_inverse(&metric, &x, &p, rho, &d, &cfg).unwrap();
                assert!((a - b).abs() < 1e-8, "{a} vs {b}");
            }
        }
    }
}
