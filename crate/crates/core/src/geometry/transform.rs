//! Gauge transformations and reparameterizations of families.

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};

use super::{berry_connection, GeometryConfig};
use crate::diffops::{derivative, FdConfig, FdScheme};
use crate::error::{Error, Result};
use crate::types::{
    MetricFamily, ParameterDomain, ParameterPoint, PhaseFn, QuantumNumber, QuantumSystem, WavefunctionFamily,
};
use crate::Complex;

pub type PhaseGradFn = dyn Fn(&ParameterPoint, usize) -> f64 + Send + Sync;

fn phase_fd_config() -> FdConfig {
    FdConfig {
        base_step: 1e-3,
        scheme: FdScheme::Richardson,
        allow_one_sided: false,
    }
}

/// `ψ → e^{iα(λ)} ψ`, with `∂_ρα` taken by Richardson-extrapolated differences.
pub fn gauge_transform(psi: &WavefunctionFamily, alpha: Arc<PhaseFn>) -> WavefunctionFamily {
    let a = Arc::clone(&alpha);
    let grad: Arc<PhaseGradFn> = Arc::new(move |l: &ParameterPoint, r: usize| {
        let free = ParameterDomain::unbounded(l.names());
        derivative(|p| a(p), l, r, &free, &phase_fd_config()).unwrap_or(f64::NAN)
    });
    gauge_transform_with_grad(psi, alpha, grad)
}

/// `ψ → e^{iα(λ)} ψ` with a caller-supplied gradient of `α`.
pub fn gauge_transform_with_grad(psi: &WavefunctionFamily, alpha: Arc<PhaseFn>, grad: Arc<PhaseGradFn>) -> WavefunctionFamily {
    let base = psi.clone();
    let a = Arc::clone(&alpha);
    let mut out = WavefunctionFamily::new(format!("{}·e^(iα)", psi.label()), psi.dim(), move |x, l, n| {
        base.eval(x, l, n) * Complex::from_polar(1.0, a(l))
    });
    if psi.analytic_param_grad().is_some() {
        let base = psi.clone();
        let a = Arc::clone(&alpha);
        out = out.with_param_grad(move |x, l, n, r| {
            let g = base.analytic_param_grad().expect("checked above");
            let phase = Complex::from_polar(1.0, a(l));
            phase * (g(x, l, n, r) + Complex::new(0.0, grad(l, r)) * base.eval(x, l, n))
        });
    }
    let total: Arc<PhaseFn> = match psi.gauge_phase() {
        Some(_) => {
            let prev = psi.clone();
            Arc::new(move |l: &ParameterPoint| alpha(l) + prev.gauge_phase().map_or(0.0, |p| p(l)))
        }
        None => alpha,
    };
    out.with_gauge_phase(total)
}

type PointMap = dyn Fn(&[f64]) -> Vec<f64> + Send + Sync;
type JacobianFn = dyn Fn(&[f64]) -> DMatrix<f64> + Send + Sync;

/// A change of parameters `λ = f(λ')`. The Jacobian is `J[a][ρ] = ∂λ^a/∂λ'^ρ`.
#[derive(Clone)]
pub struct Reparameterization {
    pub parameters: ParameterDomain,
    to_old: Arc<PointMap>,
    jacobian: Arc<JacobianFn>,
}

impl std::fmt::Debug for Reparameterization {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Reparameterization").field("parameters", &self.parameters).finish()
    }
}

impl Reparameterization {
    pub fn new<F, J>(parameters: ParameterDomain, to_old: F, jacobian: J) -> Self
    where
        F: Fn(&[f64]) -> Vec<f64> + Send + Sync + 'static,
        J: Fn(&[f64]) -> DMatrix<f64> + Send + Sync + 'static,
    {
        Self {
            parameters,
            to_old: Arc::new(to_old),
            jacobian: Arc::new(jacobian),
        }
    }

    pub fn identity(parameters: ParameterDomain) -> Self {
        let m = parameters.dim();
        Self::new(parameters, |v| v.to_vec(), move |_| DMatrix::identity(m, m))
    }

    pub fn old_values(&self, new: &[f64]) -> Vec<f64> {
        (self.to_old)(new)
    }

    pub fn jacobian(&self, new: &[f64]) -> DMatrix<f64> {
        (self.jacobian)(new)
    }
}

/// Pulls a system back along `λ = f(λ')`: `ψ'(x, λ') = ψ(x, f(λ'))` and
/// `g'(x, λ') = g(x, f(λ'))`. The Jacobian is checked at the probe points.
pub fn reparameterize(sys: &QuantumSystem, map: &Reparameterization, probes: &[Vec<f64>]) -> Result<QuantumSystem> {
    let old_names: Arc<[String]> = sys.parameters.names().into();
    let m = sys.parameters.dim();
    if map.parameters.dim() != m {
        return Err(Error::DimensionMismatch {
            field: "reparameterization",
            expected: m,
            found: map.parameters.dim(),
        });
    }
    for p in probes {
        let j = map.jacobian(p);
        let scale = j.amax().max(f64::MIN_POSITIVE);
        let det = j.determinant().abs();
        if det.is_nan() || det <= 1e-12 * scale.powi(m as i32) {
            return Err(Error::SingularJacobian { at: p.clone() });
        }
    }

    let to_old = {
        let f = Arc::clone(&map.to_old);
        let names = Arc::clone(&old_names);
        move |l: &ParameterPoint| -> ParameterPoint {
            ParameterPoint::new(&names, f(l.values())).unwrap_or_else(|_| {
                ParameterPoint::new(&names, vec![f64::NAN; names.len()]).unwrap_or_else(|_| unreachable!())
            })
        }
    };
    let to_old = Arc::new(to_old);

    let psi_old = sys.psi.clone();
    let t = Arc::clone(&to_old);
    let mut psi = WavefunctionFamily::new(format!("{}∘f", sys.psi.label()), sys.psi.dim(), move |x, l, n| {
        psi_old.eval(x, &t(l), n)
    });
    if sys.psi.analytic_param_grad().is_some() {
        let psi_old = sys.psi.clone();
        let t = Arc::clone(&to_old);
        let jac = Arc::clone(&map.jacobian);
        psi = psi.with_param_grad(move |x, l, n, r| {
            let g = psi_old.analytic_param_grad().expect("checked above");
            let old = t(l);
            let j = jac(l.values());
            (0..j.nrows()).fold(Complex::new(0.0, 0.0), |acc, a| acc + g(x, &old, n, a) * j[(a, r)])
        });
    }

    let metric_old = sys.metric.clone();
    let t = Arc::clone(&to_old);
    let mut metric = {
        let mo = metric_old.clone();
        let t2 = Arc::clone(&t);
        MetricFamily::new(format!("{}∘f", metric_old.label()), metric_old.dim(), move |x, l| mo.tensor(x, &t2(l)))
    };
    {
        let mo = metric_old.clone();
        let t2 = Arc::clone(&t);
        metric = metric.with_sqrt_det(move |x, l| mo.sqrt_det(x, &t2(l)));
    }
    if metric_old.analytic_log_det_grad().is_some() {
        let mo = metric_old.clone();
        let t2 = Arc::clone(&t);
        let jac = Arc::clone(&map.jacobian);
        metric = metric.with_log_det_grad(move |x, l, r| {
            let g = mo.analytic_log_det_grad().expect("checked above");
            let old = t2(l);
            let j = jac(l.values());
            (0..j.nrows()).map(|a| g(x, &old, a) * j[(a, r)]).sum()
        });
    }

    let dom = sys.domain_fn();
    QuantumSystem::new(psi, metric, map.parameters.clone(), move |l| dom(&t(l)))
}

/// Both sides of the connection transformation law at one point.
#[derive(Debug, Clone, PartialEq)]
pub struct ConnectionLawReport {
    /// `β'` computed directly on the pulled-back family.
    pub direct: DVector<f64>,
    /// `Jᵀ β`, the covector law.
    pub covector: DVector<f64>,
    /// `|det J| (Jᵀβ + (i/2) t)` with `t_ρ = (∂λ^α/∂λ'^μ)(∂²λ'^μ/∂λ^α∂λ'^ρ)`.
    pub density_law: DVector<Complex>,
    pub jacobian_determinant: f64,
    pub covector_deviation: f64,
    pub density_law_deviation: f64,
}

pub fn connection_law_report(
    sys: &QuantumSystem,
    map: &Reparameterization,
    new_point: &ParameterPoint,
    n: QuantumNumber,
    cfg: &GeometryConfig,
) -> Result<ConnectionLawReport> {
    let pulled = reparameterize(sys, map, &[new_point.values().to_vec()])?;
    let direct = berry_connection(&pulled, new_point, n, cfg)?.values;
    let old = sys.parameters.point(map.old_values(new_point.values()))?;
    let beta = berry_connection(sys, &old, n, cfg)?.values;
    let j = map.jacobian(new_point.values());
    let covector = j.transpose() * &beta;
    let det = j.determinant();
    let m = new_point.dim();
    // J K = 1 with K = ∂λ'/∂λ, so tr(J ∂_ρ' K) = −∂_ρ' ln|det J|.
    let mut t = DVector::zeros(m);
    for r in 0..m {
        t[r] = -derivative(
            |p| map.jacobian(p.values()).determinant().abs().ln(),
            new_point,
            r,
            &map.parameters,
            &FdConfig::default(),
        )?;
    }
    let density_law = DVector::from_fn(m, |r, _| Complex::new(covector[r], 0.5 * t[r]) * det.abs());
    let covector_deviation = (&direct - &covector).amax();
    let density_law_deviation = (0..m)
        .map(|r| (density_law[r] - Complex::new(direct[r], 0.0)).norm())
        .fold(0.0, f64::max);
    Ok(ConnectionLawReport {
        direct,
        covector,
        density_law,
        jacobian_determinant: det,
        covector_deviation,
        density_law_deviation,
    })
}
