//! Curved-space geometric tensors.
//!
//! Everything is built from the weighted state `φ = g^{1/4} ψ`, whose parameter
//! derivative is `∂_ρφ = g^{1/4}(∂_ρψ − ¼σ_ρψ)` with `σ_ρ = −∂_ρ ln det g`. A single
//! vector quadrature per `(λ, n)` produces all the brackets the tensors need:
//!
//! | symbol   | integrand (times `sqrt g`)      |
//! |----------|---------------------------------|
//! | `N`      | `|ψ|²`                          |
//! | `a_ρ`    | `ψ* ∂_ρψ`                       |
//! | `s_ρ`    | `σ_ρ |ψ|²`                      |
//! | `B_ρκ`   | `∂_ρψ* ∂_κψ`                    |
//! | `S_ρκ`   | `σ_ρ ψ* ∂_κψ`                   |
//! | `T_ρκ`   | `σ_ρ σ_κ |ψ|²`                  |

mod loops;
mod transform;

use std::collections::HashMap;
use std::sync::{Arc, Mutex};

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::diffops::{self, FdConfig};
use crate::domain::Domain;
use crate::error::{Error, Result};
use crate::quadrature::{self, Integral, QuadratureConfig};
use crate::types::{Diagnostics, GeometricTensors, MetricFamily, ParameterPoint, QuantumNumber, QuantumSystem};
use crate::Complex;

pub use loops::{berry_phase_loop, gauss_legendre};
pub use transform::{
    connection_law_report, gauge_transform, gauge_transform_with_grad, reparameterize, ConnectionLawReport,
    Reparameterization,
};

/// How `∂_ρψ` and `σ_ρ` are obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum DerivativeRoute {
    /// Closed forms when the model supplies them, finite differences otherwise.
    #[default]
    Analytic,
    /// Finite differences throughout.
    FiniteDifference,
}

#[derive(Debug, Clone)]
pub struct GeometryConfig {
    pub quad: QuadratureConfig,
    pub fd: FdConfig,
    pub route: DerivativeRoute,
    /// Maximum tolerated `|<ψ|ψ> − 1|`.
    pub norm_tol: f64,
    /// Maximum tolerated `|𝒢 − 𝒢^†|` before the tensor is rejected.
    pub hermiticity_tol: f64,
    /// Threshold on the imaginary part of the Berry connection above which a
    /// warning is attached.
    pub connection_warn: f64,
    pub cache: Option<Arc<BracketCache>>,
}

impl Default for GeometryConfig {
    fn default() -> Self {
        Self {
            quad: QuadratureConfig::default(),
            fd: FdConfig::default(),
            route: DerivativeRoute::Analytic,
            norm_tol: 1e-6,
            hermiticity_tol: 1e-7,
            connection_warn: 1e-6,
            cache: None,
        }
    }
}

impl GeometryConfig {
    pub fn with_cache(mut self) -> Self {
        self.cache = Some(Arc::new(BracketCache::default()));
        self
    }

    pub fn finite_difference(mut self) -> Self {
        self.route = DerivativeRoute::FiniteDifference;
        self
    }
}

/// All curved brackets of one state at one parameter point.
#[derive(Debug, Clone, PartialEq)]
pub struct Brackets {
    pub norm: f64,
    pub a: DVector<Complex>,
    pub s: DVector<f64>,
    pub b: DMatrix<Complex>,
    pub sa: DMatrix<Complex>,
    pub t: DMatrix<f64>,
    /// Sum of the quadrature error estimates of every bracket.
    pub error: f64,
    pub evaluations: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
struct CacheKey {
    psi: u64,
    metric: u64,
    lambda: Vec<u64>,
    n: QuantumNumber,
    quad: [u64; 5],
    fd: [u64; 3],
    route: DerivativeRoute,
}

/// Memoized brackets. Concurrent readers share it; the first finished value for a
/// key wins and later inserts for the same key are dropped, so hits are
/// bitwise stable.
#[derive(Debug, Default)]
pub struct BracketCache {
    map: Mutex<HashMap<CacheKey, Arc<Brackets>>>,
}

impl BracketCache {
    pub fn len(&self) -> usize {
        self.map.lock().map(|m| m.len()).unwrap_or(0)
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    fn get(&self, k: &CacheKey) -> Option<Arc<Brackets>> {
        self.map.lock().ok()?.get(k).cloned()
    }

    fn insert(&self, k: CacheKey, v: Brackets) -> Arc<Brackets> {
        let mut map = self.map.lock().unwrap_or_else(|e| e.into_inner());
        Arc::clone(map.entry(k).or_insert_with(|| Arc::new(v)))
    }
}

fn layout(m: usize) -> (usize, usize, usize, usize, usize, usize) {
    let a = 1;
    let s = a + m;
    let b = s + m;
    let sa = b + m * m;
    let t = sa + m * m;
    (a, s, b, sa, t, t + m * m)
}

/// `∫ sqrt(g) φ* ψ` for two state evaluators at the same parameter point.
pub fn inner_product<F, G>(
    phi: F,
    psi: G,
    metric: &MetricFamily,
    domain: &Domain,
    lambda: &ParameterPoint,
    cfg: &QuadratureConfig,
) -> Result<Integral>
where
    F: Fn(&[f64]) -> Complex,
    G: Fn(&[f64]) -> Complex,
{
    quadrature::integrate(|x| phi(x).conj() * psi(x) * metric.sqrt_det(x, lambda), domain, cfg)
}

/// Computes (or fetches) all brackets of `ψ_n` at `λ`.
pub fn brackets(sys: &QuantumSystem, lambda: &ParameterPoint, n: QuantumNumber, cfg: &GeometryConfig) -> Result<Arc<Brackets>> {
    sys.parameters.check(lambda)?;
    let key = cfg.cache.as_ref().map(|_| CacheKey {
        psi: sys.psi.id(),
        metric: sys.metric.id(),
        lambda: lambda.values().iter().map(|v| v.to_bits()).collect(),
        n,
        quad: cfg.quad.key(),
        fd: cfg.fd.key(),
        route: cfg.route,
    });
    if let (Some(cache), Some(k)) = (&cfg.cache, &key) {
        if let Some(hit) = cache.get(k) {
            return Ok(hit);
        }
    }
    let b = compute_brackets(sys, lambda, n, cfg)?;
    Ok(match (&cfg.cache, key) {
        (Some(cache), Some(k)) => cache.insert(k, b),
        _ => Arc::new(b),
    })
}

fn compute_brackets(sys: &QuantumSystem, lambda: &ParameterPoint, n: QuantumNumber, cfg: &GeometryConfig) -> Result<Brackets> {
    let m = lambda.dim();
    let (ia, is, ib, isa, it, total) = layout(m);
    let domain = sys.domain(lambda);
    let psi = match cfg.route {
        DerivativeRoute::Analytic => sys.psi.clone(),
        DerivativeRoute::FiniteDifference => sys.psi.without_param_grad(),
    };
    let metric = &sys.metric;
    let params = &sys.parameters;
    let fd = &cfg.fd;
    let fd_sigma = cfg.route == DerivativeRoute::FiniteDifference;

    let mut d = vec![Complex::new(0.0, 0.0); m];
    let mut sig = vec![0.0; m];
    let integrand = |x: &[f64], out: &mut [Complex]| -> Result<()> {
        out.fill(Complex::new(0.0, 0.0));
        let w = metric.sqrt_det(x, lambda);
        if w.is_nan() {
            return Err(Error::NonFiniteMetric { x: x.to_vec() });
        }
        if w < 0.0 {
            return Err(Error::MetricNotPositiveDefinite { x: x.to_vec() });
        }
        if w == 0.0 {
            return Ok(());
        }
        let p = psi.eval(x, lambda, n);
        for (r, dr) in d.iter_mut().enumerate() {
            *dr = diffops::d_psi(&psi, n, x, lambda, r, params, fd)?;
        }
        let p2 = p.norm_sqr();
        if p2 == 0.0 && d.iter().all(|v| *v == Complex::new(0.0, 0.0)) {
            return Ok(());
        }
        for (r, sr) in sig.iter_mut().enumerate() {
            let g = if fd_sigma {
                diffops::d_log_det_g_fd(metric, x, lambda, r, params, fd)?
            } else {
                diffops::d_log_det_g(metric, x, lambda, r, params, fd)?
            };
            if !g.is_finite() {
                return Err(Error::NonFiniteSigma { parameter: r, x: x.to_vec() });
            }
            *sr = -g;
        }
        let pc = p.conj() * w;
        out[0] = Complex::new(w * p2, 0.0);
        for r in 0..m {
            out[ia + r] = pc * d[r];
            out[is + r] = Complex::new(w * sig[r] * p2, 0.0);
            let dr = d[r].conj() * w;
            for k in 0..m {
                out[ib + r * m + k] = dr * d[k];
                out[isa + r * m + k] = pc * d[k] * sig[r];
                out[it + r * m + k] = Complex::new(w * sig[r] * sig[k] * p2, 0.0);
            }
        }
        Ok(())
    };
    let r = quadrature::integrate_vec(integrand, total, &domain, &cfg.quad)?;
    let v = &r.value;
    Ok(Brackets {
        norm: v[0].re,
        a: DVector::from_fn(m, |i, _| v[ia + i]),
        s: DVector::from_fn(m, |i, _| v[is + i].re),
        b: DMatrix::from_fn(m, m, |i, j| v[ib + i * m + j]),
        sa: DMatrix::from_fn(m, m, |i, j| v[isa + i * m + j]),
        t: DMatrix::from_fn(m, m, |i, j| v[it + i * m + j].re),
        error: r.error.iter().sum(),
        evaluations: r.evaluations,
    })
}

fn normalized(sys: &QuantumSystem, lambda: &ParameterPoint, n: QuantumNumber, cfg: &GeometryConfig) -> Result<Arc<Brackets>> {
    let b = brackets(sys, lambda, n, cfg)?;
    if (b.norm - 1.0).abs() > cfg.norm_tol {
        return Err(Error::NotNormalized { norm: b.norm });
    }
    Ok(b)
}

/// `<φ|σ_ρ|φ>` with `φ = g^{1/4} ψ_n`.
pub fn sigma_expectation(sys: &QuantumSystem, lambda: &ParameterPoint, n: QuantumNumber, rho: usize, cfg: &GeometryConfig) -> Result<f64> {
    let b = normalized(sys, lambda, n, cfg)?;
    b.s.get(rho).copied().ok_or(Error::DimensionMismatch {
        field: "rho",
        expected: b.s.len(),
        found: rho,
    })
}

/// Modified Berry connection with its discarded imaginary part.
#[derive(Debug, Clone, PartialEq)]
pub struct BerryConnection {
    pub values: DVector<f64>,
    pub imag_residue: f64,
    pub error: f64,
    pub warnings: Vec<String>,
}

fn connection_from(b: &Brackets, warn: f64) -> BerryConnection {
    let m = b.a.len();
    // β_ρ = −i a_ρ + (i/4) s_ρ
    let full: Vec<Complex> = (0..m)
        .map(|r| Complex::new(0.0, -1.0) * b.a[r] + Complex::new(0.0, 0.25 * b.s[r]))
        .collect();
    let imag_residue = full.iter().fold(0.0f64, |acc, v| acc.max(v.im.abs()));
    let mut warnings = Vec::new();
    if imag_residue > warn {
        warnings.push(format!(
            "Berry connection has imaginary residue {imag_residue:e}; check normalization and step size"
        ));
    }
    BerryConnection {
        values: DVector::from_iterator(m, full.iter().map(|v| v.re)),
        imag_residue,
        error: b.error,
        warnings,
    }
}

pub fn berry_connection(sys: &QuantumSystem, lambda: &ParameterPoint, n: QuantumNumber, cfg: &GeometryConfig) -> Result<BerryConnection> {
    let b = normalized(sys, lambda, n, cfg)?;
    Ok(connection_from(&b, cfg.connection_warn))
}

fn gamma_from(b: &Brackets) -> DMatrix<f64> {
    let m = b.a.len();
    let g = DMatrix::from_fn(m, m, |r, k| {
        b.b[(r, k)].re - 0.25 * (b.sa[(r, k)].re + b.sa[(k, r)].re) + b.t[(r, k)] / 16.0
    });
    (&g + g.transpose()) * 0.5
}

/// `γ_ρκ = Re<∂_ρφ|∂_κφ>`.
pub fn gamma_tensor(sys: &QuantumSystem, lambda: &ParameterPoint, n: QuantumNumber, cfg: &GeometryConfig) -> Result<DMatrix<f64>> {
    Ok(gamma_from(&*normalized(sys, lambda, n, cfg)?))
}

fn qmt_from(b: &Brackets, beta: &DVector<f64>) -> DMatrix<f64> {
    gamma_from(b) - beta * beta.transpose()
}

/// `G = γ − β βᵀ`.
pub fn qmt(sys: &QuantumSystem, lambda: &ParameterPoint, n: QuantumNumber, cfg: &GeometryConfig) -> Result<DMatrix<f64>> {
    let b = normalized(sys, lambda, n, cfg)?;
    let beta = connection_from(&b, cfg.connection_warn).values;
    Ok(qmt_from(&b, &beta))
}

/// Berry curvature from the bracket expansion,
/// `F_ρκ = Im B_ρκ − ¼ (Im S_ρκ − Im S_κρ)`.
///
/// This is the normalization in which `F = Im 𝒢`; the exterior derivative of the
/// connection is `dβ = 2F`.
fn curvature_from(b: &Brackets) -> DMatrix<f64> {
    let m = b.a.len();
    let f = DMatrix::from_fn(m, m, |r, k| b.b[(r, k)].im - 0.25 * (b.sa[(r, k)].im - b.sa[(k, r)].im));
    (&f - f.transpose()) * 0.5
}

pub fn berry_curvature(sys: &QuantumSystem, lambda: &ParameterPoint, n: QuantumNumber, cfg: &GeometryConfig) -> Result<DMatrix<f64>> {
    Ok(curvature_from(&*normalized(sys, lambda, n, cfg)?))
}

/// `𝒢_ρκ = <∂_ρφ|∂_κφ> − <∂_ρφ|φ><φ|∂_κφ>` expanded in brackets.
fn qgt_from(b: &Brackets) -> DMatrix<Complex> {
    let m = b.a.len();
    let c: Vec<Complex> = (0..m).map(|r| b.a[r] - 0.25 * b.s[r]).collect();
    DMatrix::from_fn(m, m, |r, k| {
        b.b[(r, k)] - 0.25 * b.sa[(r, k)] - 0.25 * b.sa[(k, r)].conj() + b.t[(r, k)] / 16.0 - c[r].conj() * c[k]
    })
}

/// The full tensor bundle at one point.
pub fn qgt(sys: &QuantumSystem, lambda: &ParameterPoint, n: QuantumNumber, cfg: &GeometryConfig) -> Result<GeometricTensors> {
    let b = normalized(sys, lambda, n, cfg)?;
    let raw = qgt_from(&b);
    let residue = raw
        .iter()
        .zip(raw.adjoint().iter())
        .fold(0.0f64, |acc, (x, y)| acc.max((x - y).norm()));
    if residue > cfg.hermiticity_tol {
        return Err(Error::NotHermitian { residue });
    }
    let q = (&raw + raw.adjoint()) * Complex::new(0.5, 0.0);
    let conn = connection_from(&b, cfg.connection_warn);
    let qmt = qmt_from(&b, &conn.values);
    let f = curvature_from(&b);
    let identity = (0..b.a.len()).map(|r| 2.0 * b.a[r].re - 0.5 * b.s[r]).collect();
    Ok(GeometricTensors {
        qgt: q,
        qmt,
        berry_curvature: f,
        berry_connection: conn.values,
        quad_error: b.error,
        fd_steps: cfg.fd.steps(lambda),
        diagnostics: Diagnostics {
            norm: b.norm,
            hermiticity_residue: residue,
            connection_imag_residue: conn.imag_residue,
            normalization_identity: identity,
            warnings: conn.warnings,
        },
    })
}

/// `2 Re<ψ|∂_ρψ> − ½<σ_ρ>` for every `ρ`; zero for a normalized family.
pub fn normalization_identity(sys: &QuantumSystem, lambda: &ParameterPoint, n: QuantumNumber, cfg: &GeometryConfig) -> Result<Vec<f64>> {
    let b = brackets(sys, lambda, n, cfg)?;
    Ok((0..b.a.len()).map(|r| 2.0 * b.a[r].re - 0.5 * b.s[r]).collect())
}

/// Eigenvalues of a Hermitian matrix, ascending.
pub fn hermitian_eigenvalues(m: &DMatrix<Complex>) -> Vec<f64> {
    let mut e: Vec<f64> = SymmetricEigen::new(m.clone()).eigenvalues.iter().copied().collect();
    e.sort_by(f64::total_cmp);
    e
}
