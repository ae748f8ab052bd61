use std::fmt;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};

use crate::diffops::{self, FdConfig};
use crate::domain::Domain;
use crate::error::{Error, Result};
use crate::quadrature::{self, QuadratureConfig};
use crate::Complex;

static NEXT_ID: AtomicU64 = AtomicU64::new(1);

pub(crate) fn fresh_id() -> u64 {
    NEXT_ID.fetch_add(1, Ordering::Relaxed)
}

/// A point `λ = (λ_1, …, λ_m)` of parameter space together with its labels.
#[derive(Clone, PartialEq)]
pub struct ParameterPoint {
    names: Arc<[String]>,
    values: Vec<f64>,
}

impl fmt::Debug for ParameterPoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut m = f.debug_map();
        for (n, v) in self.names.iter().zip(&self.values) {
            m.entry(n, v);
        }
        m.finish()
    }
}

impl ParameterPoint {
    pub fn new<S: AsRef<str>>(names: &[S], values: Vec<f64>) -> Result<Self> {
        if names.is_empty() {
            return Err(Error::InvalidParameter("at least one parameter is required".into()));
        }
        if names.len() != values.len() {
            return Err(Error::DimensionMismatch {
                field: "values",
                expected: names.len(),
                found: values.len(),
            });
        }
        if let Some((i, v)) = values.iter().enumerate().find(|(_, v)| !v.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "`{}` is not finite ({v})",
                names[i].as_ref()
            )));
        }
        Ok(Self {
            names: names.iter().map(|s| s.as_ref().to_string()).collect(),
            values,
        })
    }

    pub fn dim(&self) -> usize {
        self.values.len()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    #[inline]
    pub fn get(&self, i: usize) -> f64 {
        self.values[i]
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.names.iter().position(|n| n == name)
    }

    /// Same labels, new values. Values are not re-validated for finiteness.
    pub fn with_values(&self, values: Vec<f64>) -> Self {
        debug_assert_eq!(values.len(), self.values.len());
        Self {
            names: Arc::clone(&self.names),
            values,
        }
    }

    pub fn with_value(&self, i: usize, v: f64) -> Self {
        let mut values = self.values.clone();
        values[i] = v;
        self.with_values(values)
    }

    pub fn shifted(&self, i: usize, delta: f64) -> Self {
        self.with_value(i, self.values[i] + delta)
    }

    pub fn displaced(&self, delta: &[f64]) -> Self {
        self.with_values(self.values.iter().zip(delta).map(|(a, b)| a + b).collect())
    }
}

/// Quantum-number label: a single index for 1-D families, a pair for 2-D ones.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum QuantumNumber {
    One(u32),
    Two(u32, u32),
}

impl QuantumNumber {
    pub fn is_ground(&self) -> bool {
        matches!(self, QuantumNumber::One(0) | QuantumNumber::Two(0, 0))
    }

    /// The single index of a 1-D label; the sum for a pair.
    pub fn level(&self) -> u32 {
        match *self {
            QuantumNumber::One(n) => n,
            QuantumNumber::Two(a, b) => a + b,
        }
    }
}

impl Default for QuantumNumber {
    fn default() -> Self {
        QuantumNumber::One(0)
    }
}

impl From<u32> for QuantumNumber {
    fn from(n: u32) -> Self {
        QuantumNumber::One(n)
    }
}

impl fmt::Display for QuantumNumber {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            QuantumNumber::One(n) => write!(f, "{n}"),
            QuantumNumber::Two(a, b) => write!(f, "({a},{b})"),
        }
    }
}

pub type MetricFn = dyn Fn(&[f64], &ParameterPoint) -> DMatrix<f64> + Send + Sync;
pub type SqrtDetFn = dyn Fn(&[f64], &ParameterPoint) -> f64 + Send + Sync;
pub type LogDetGradFn = dyn Fn(&[f64], &ParameterPoint, usize) -> f64 + Send + Sync;

/// Spatial metric `g_ij(x, λ)`.
#[derive(Clone)]
pub struct MetricFamily {
    id: u64,
    label: String,
    dim: usize,
    eval: Arc<MetricFn>,
    sqrt_det: Option<Arc<SqrtDetFn>>,
    log_det_grad: Option<Arc<LogDetGradFn>>,
}

impl fmt::Debug for MetricFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("MetricFamily")
            .field("label", &self.label)
            .field("dim", &self.dim)
            .field("analytic_log_det_grad", &self.log_det_grad.is_some())
            .finish()
    }
}

impl MetricFamily {
    pub fn new<F>(label: impl Into<String>, dim: usize, eval: F) -> Self
    where
        F: Fn(&[f64], &ParameterPoint) -> DMatrix<f64> + Send + Sync + 'static,
    {
        Self {
            id: fresh_id(),
            label: label.into(),
            dim,
            eval: Arc::new(eval),
            sqrt_det: None,
            log_det_grad: None,
        }
    }

    /// `g_ij = δ_ij`.
    pub fn flat(dim: usize) -> Self {
        Self::new("flat", dim, move |_, _| DMatrix::identity(dim, dim))
            .with_sqrt_det(|_, _| 1.0)
            .with_log_det_grad(|_, _, _| 0.0)
    }

    /// Closed form for `sqrt(det g)`; models use it to evaluate `sqrt(x^2)` as `|x|`.
    pub fn with_sqrt_det<F>(mut self, f: F) -> Self
    where
        F: Fn(&[f64], &ParameterPoint) -> f64 + Send + Sync + 'static,
    {
        self.sqrt_det = Some(Arc::new(f));
        self
    }

    pub fn with_log_det_grad<F>(mut self, f: F) -> Self
    where
        F: Fn(&[f64], &ParameterPoint, usize) -> f64 + Send + Sync + 'static,
    {
        self.log_det_grad = Some(Arc::new(f));
        self
    }

    pub fn without_log_det_grad(mut self) -> Self {
        self.log_det_grad = None;
        self.id = fresh_id();
        self
    }

    pub fn id(&self) -> u64 {
        self.id
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn tensor(&self, x: &[f64], lambda: &ParameterPoint) -> DMatrix<f64> {
        (self.eval)(x, lambda)
    }

    pub fn sqrt_det(&self, x: &[f64], lambda: &ParameterPoint) -> f64 {
        match &self.sqrt_det {
            Some(f) => f(x, lambda),
            None => {
                let g = self.tensor(x, lambda);
                let d = if self.dim == 1 { g[(0, 0)] } else { g.determinant() };
                if d > 0.0 {
                    d.sqrt()
                } else {
                    f64::NAN
                }
            }
        }
    }

    pub fn log_det(&self, x: &[f64], lambda: &ParameterPoint) -> f64 {
        2.0 * self.sqrt_det(x, lambda).ln()
    }

    pub fn analytic_log_det_grad(&self) -> Option<&LogDetGradFn> {
        self.log_det_grad.as_deref()
    }
}

pub type PsiFn = dyn Fn(&[f64], &ParameterPoint, QuantumNumber) -> Complex + Send + Sync;
pub type PsiGradFn = dyn Fn(&[f64], &ParameterPoint, QuantumNumber, usize) -> Complex + Send + Sync;
pub type PhaseFn = dyn Fn(&ParameterPoint) -> f64 + Send + Sync;

/// Amplitudes `ψ_n(x, λ)` with optional closed-form parameter derivatives.
#[derive(Clone)]
pub struct WavefunctionFamily {
    id: u64,
    label: String,
    dim: usize,
    eval: Arc<PsiFn>,
    param_grad: Option<Arc<PsiGradFn>>,
    gauge_phase: Option<Arc<PhaseFn>>,
}

impl fmt::Debug for WavefunctionFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("WavefunctionFamily")
            .field("label", &self.label)
            .field("dim", &self.dim)
            .field("analytic_param_grad", &self.param_grad.is_some())
            .field("gauge_phase", &self.gauge_phase.is_some())
            .finish()
    }
}

impl WavefunctionFamily {
    pub fn new<F>(label: impl Into<String>, dim: usize, eval: F) -> Self
    where
        F: Fn(&[f64], &ParameterPoint, QuantumNumber) -> Complex + Send + Sync + 'static,
    {
        Self {
            id: fresh_id(),
            label: label.into(),
            dim,
            eval: Arc::new(eval),
            param_grad: None,
            gauge_phase: None,
        }
    }

    pub fn with_param_grad<F>(mut self, f: F) -> Self
    where
        F: Fn(&[f64], &ParameterPoint, QuantumNumber, usize) -> Complex + Send + Sync + 'static,
    {
        self.param_grad = Some(Arc::new(f));
        self.id = fresh_id();
        self
    }

    /// Same amplitudes, derivatives left to finite differences.
    pub fn without_param_grad(&self) -> Self {
        let mut out = self.clone();
        out.param_grad = None;
        out.id = fresh_id();
        out
    }

    pub fn with_gauge_phase(mut self, alpha: Arc<PhaseFn>) -> Self {
        self.gauge_phase = Some(alpha);
        self
    }

    pub fn id(&self) -> u64 {
        self.id
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn eval(&self, x: &[f64], lambda: &ParameterPoint, n: QuantumNumber) -> Complex {
        (self.eval)(x, lambda, n)
    }

    pub fn analytic_param_grad(&self) -> Option<&PsiGradFn> {
        self.param_grad.as_deref()
    }

    /// The phase `α(λ)` applied by the last gauge transformation, if any.
    pub fn gauge_phase(&self) -> Option<&PhaseFn> {
        self.gauge_phase.as_deref()
    }
}

/// Open interval `(lo, hi)` with isolated excluded values.
#[derive(Debug, Clone, PartialEq)]
pub struct ParameterRange {
    pub lo: f64,
    pub hi: f64,
    pub excluded: Vec<f64>,
}

impl ParameterRange {
    pub fn open(lo: f64, hi: f64) -> Self {
        Self {
            lo,
            hi,
            excluded: Vec::new(),
        }
    }

    pub fn positive() -> Self {
        Self::open(0.0, f64::INFINITY)
    }

    pub fn real() -> Self {
        Self::open(f64::NEG_INFINITY, f64::INFINITY)
    }

    pub fn nonzero() -> Self {
        Self {
            lo: f64::NEG_INFINITY,
            hi: f64::INFINITY,
            excluded: vec![0.0],
        }
    }

    pub fn contains(&self, v: f64) -> bool {
        v > self.lo && v < self.hi && !self.excluded.contains(&v)
    }

    /// Whether the closed segment `[a, b]` stays inside the range.
    pub fn contains_segment(&self, a: f64, b: f64) -> bool {
        let (a, b) = if a <= b { (a, b) } else { (b, a) };
        a > self.lo && b < self.hi && !self.excluded.iter().any(|&e| e >= a && e <= b)
    }
}

pub type JointConstraint = dyn Fn(&[f64]) -> bool + Send + Sync;

/// Admissible region of parameter space.
#[derive(Clone)]
pub struct ParameterDomain {
    names: Vec<String>,
    ranges: Vec<ParameterRange>,
    joint: Option<(String, Arc<JointConstraint>)>,
}

impl fmt::Debug for ParameterDomain {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ParameterDomain")
            .field("names", &self.names)
            .field("ranges", &self.ranges)
            .field("joint", &self.joint.as_ref().map(|j| &j.0))
            .finish()
    }
}

impl ParameterDomain {
    pub fn new<S: AsRef<str>>(names: &[S], ranges: Vec<ParameterRange>) -> Self {
        assert_eq!(names.len(), ranges.len());
        Self {
            names: names.iter().map(|s| s.as_ref().to_string()).collect(),
            ranges,
            joint: None,
        }
    }

    pub fn unbounded<S: AsRef<str>>(names: &[S]) -> Self {
        Self::new(names, vec![ParameterRange::real(); names.len()])
    }

    /// Extra constraint on the whole vector. It must describe a convex set so that
    /// checking the end points of a stencil is enough.
    pub fn with_joint<F>(mut self, description: impl Into<String>, f: F) -> Self
    where
        F: Fn(&[f64]) -> bool + Send + Sync + 'static,
    {
        self.joint = Some((description.into(), Arc::new(f)));
        self
    }

    pub fn dim(&self) -> usize {
        self.ranges.len()
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn ranges(&self) -> &[ParameterRange] {
        &self.ranges
    }

    pub fn point(&self, values: Vec<f64>) -> Result<ParameterPoint> {
        let p = ParameterPoint::new(&self.names, values)?;
        self.check(&p)?;
        Ok(p)
    }

    pub fn contains(&self, lambda: &ParameterPoint) -> bool {
        self.check(lambda).is_ok()
    }

    pub fn check(&self, lambda: &ParameterPoint) -> Result<()> {
        if lambda.dim() != self.dim() {
            return Err(Error::DimensionMismatch {
                field: "parameters",
                expected: self.dim(),
                found: lambda.dim(),
            });
        }
        for (i, r) in self.ranges.iter().enumerate() {
            if !r.contains(lambda.get(i)) {
                return Err(Error::OutsideParameterDomain {
                    name: self.names[i].clone(),
                    value: lambda.get(i),
                });
            }
        }
        if let Some((desc, f)) = &self.joint {
            if !f(lambda.values()) {
                return Err(Error::InvalidParameter(format!(
                    "{lambda:?} violates the constraint {desc}"
                )));
            }
        }
        Ok(())
    }

    /// Whether moving `λ_i` anywhere in `[a, b]` (others fixed) stays admissible.
    pub fn segment_admissible(&self, lambda: &ParameterPoint, i: usize, a: f64, b: f64) -> bool {
        if !self.ranges[i].contains_segment(a, b) {
            return false;
        }
        match &self.joint {
            Some((_, f)) => f(lambda.with_value(i, a).values()) && f(lambda.with_value(i, b).values()),
            None => true,
        }
    }
}

pub type DomainFn = dyn Fn(&ParameterPoint) -> Domain + Send + Sync;

/// A wavefunction family, its metric, the integration region and the admissible
/// parameters, bundled for the geometric operations.
#[derive(Clone)]
pub struct QuantumSystem {
    pub psi: WavefunctionFamily,
    pub metric: MetricFamily,
    pub parameters: ParameterDomain,
    domain: Arc<DomainFn>,
}

impl fmt::Debug for QuantumSystem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("QuantumSystem")
            .field("psi", &self.psi)
            .field("metric", &self.metric)
            .field("parameters", &self.parameters)
            .finish()
    }
}

impl QuantumSystem {
    pub fn new<D>(
        psi: WavefunctionFamily,
        metric: MetricFamily,
        parameters: ParameterDomain,
        domain: D,
    ) -> Result<Self>
    where
        D: Fn(&ParameterPoint) -> Domain + Send + Sync + 'static,
    {
        if psi.dim() != metric.dim() {
            return Err(Error::DimensionMismatch {
                field: "psi.dim",
                expected: metric.dim(),
                found: psi.dim(),
            });
        }
        Ok(Self {
            psi,
            metric,
            parameters,
            domain: Arc::new(domain),
        })
    }

    /// Same domain for every `λ`.
    pub fn with_fixed_domain(
        psi: WavefunctionFamily,
        metric: MetricFamily,
        parameters: ParameterDomain,
        domain: Domain,
    ) -> Result<Self> {
        Self::new(psi, metric, parameters, move |_| domain.clone())
    }

    pub fn domain(&self, lambda: &ParameterPoint) -> Domain {
        (self.domain)(lambda)
    }

    pub fn domain_fn(&self) -> Arc<DomainFn> {
        Arc::clone(&self.domain)
    }

    pub fn with_psi(&self, psi: WavefunctionFamily) -> Self {
        Self {
            psi,
            ..self.clone()
        }
    }

    pub fn point(&self, values: Vec<f64>) -> Result<ParameterPoint> {
        self.parameters.point(values)
    }

    pub fn num_parameters(&self) -> usize {
        self.parameters.dim()
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Diagnostics {
    /// `<ψ|ψ>` under the curved measure.
    pub norm: f64,
    /// `max |𝒢 − 𝒢^†|` before symmetrization.
    pub hermiticity_residue: f64,
    /// Largest imaginary part discarded from the Berry connection.
    pub connection_imag_residue: f64,
    /// `2 Re<ψ|∂_ρψ> − ½<σ_ρ>` per parameter.
    pub normalization_identity: Vec<f64>,
    pub warnings: Vec<String>,
}

/// Everything the geometric route produces at one parameter point.
#[derive(Debug, Clone, PartialEq)]
pub struct GeometricTensors {
    pub qgt: DMatrix<Complex>,
    pub qmt: DMatrix<f64>,
    pub berry_curvature: DMatrix<f64>,
    pub berry_connection: DVector<f64>,
    pub quad_error: f64,
    pub fd_steps: Vec<f64>,
    pub diagnostics: Diagnostics,
}

/// Residues of the structural identities a [`GeometricTensors`] must satisfy.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InvariantResidues {
    pub qmt_asymmetry: f64,
    pub curvature_symmetry: f64,
    pub qmt_vs_real_part: f64,
    pub curvature_vs_imag_part: f64,
    pub qgt_non_hermiticity: f64,
}

impl InvariantResidues {
    pub fn max(&self) -> f64 {
        [
            self.qmt_asymmetry,
            self.curvature_symmetry,
            self.qmt_vs_real_part,
            self.curvature_vs_imag_part,
            self.qgt_non_hermiticity,
        ]
        .into_iter()
        .fold(0.0, f64::max)
    }
}

impl GeometricTensors {
    pub fn dim(&self) -> usize {
        self.qmt.nrows()
    }

    /// Error budget for comparisons: ten times the summed bracket errors, floored.
    pub fn tolerance(&self) -> f64 {
        (10.0 * self.quad_error).max(1e-10)
    }

    /// The curvature is stored in the normalization where it equals `Im 𝒢`
    /// (half the exterior derivative of the connection).
    pub fn invariant_residues(&self) -> InvariantResidues {
        let m = self.dim();
        let mut r = InvariantResidues {
            qmt_asymmetry: 0.0,
            curvature_symmetry: 0.0,
            qmt_vs_real_part: 0.0,
            curvature_vs_imag_part: 0.0,
            qgt_non_hermiticity: 0.0,
        };
        for i in 0..m {
            for j in 0..m {
                let g = self.qmt[(i, j)];
                let f = self.berry_curvature[(i, j)];
                let q = self.qgt[(i, j)];
                r.qmt_asymmetry = r.qmt_asymmetry.max((g - self.qmt[(j, i)]).abs());
                r.curvature_symmetry =
                    r.curvature_symmetry.max((f + self.berry_curvature[(j, i)]).abs());
                r.qmt_vs_real_part = r.qmt_vs_real_part.max((g - q.re).abs());
                r.curvature_vs_imag_part = r.curvature_vs_imag_part.max((f - q.im).abs());
                r.qgt_non_hermiticity =
                    r.qgt_non_hermiticity.max((q - self.qgt[(j, i)].conj()).norm());
            }
        }
        r
    }

    pub fn qmt_determinant(&self) -> f64 {
        self.qmt.determinant()
    }

    /// Determinant of the QMT with row and column `fixed` removed.
    pub fn qmt_subdeterminant(&self, fixed: usize) -> f64 {
        self.qmt.clone().remove_row(fixed).remove_column(fixed).determinant()
    }
}

/// Result of [`validate_model`].
#[derive(Debug, Clone, PartialEq)]
pub struct ModelReport {
    pub metric_samples: usize,
    pub min_metric_eigenvalue: f64,
    pub norm: f64,
    pub norm_error: f64,
    pub norm_deviation: f64,
    pub sigma_samples: usize,
    pub sigma_finite: bool,
}

/// Sanity checks on a (metric, wavefunction, domain) triple at one parameter point:
/// positive-definiteness of `g` at sample points, curved norm of `ψ_n`, and
/// finiteness of `σ_ρ = −∂_ρ ln det g`.
pub fn validate_model(
    metric: &MetricFamily,
    psi: &WavefunctionFamily,
    domain: &Domain,
    lambda: &ParameterPoint,
    n: QuantumNumber,
) -> Result<ModelReport> {
    validate_model_with(
        metric,
        psi,
        domain,
        lambda,
        n,
        &QuadratureConfig::default(),
        &FdConfig::default(),
    )
}

pub fn validate_model_with(
    metric: &MetricFamily,
    psi: &WavefunctionFamily,
    domain: &Domain,
    lambda: &ParameterPoint,
    n: QuantumNumber,
    quad: &QuadratureConfig,
    fd: &FdConfig,
) -> Result<ModelReport> {
    if psi.dim() != metric.dim() {
        return Err(Error::DimensionMismatch {
            field: "psi.dim",
            expected: metric.dim(),
            found: psi.dim(),
        });
    }
    if domain.dim() != metric.dim() {
        return Err(Error::DimensionMismatch {
            field: "domain.dim",
            expected: metric.dim(),
            found: domain.dim(),
        });
    }

    let samples = domain.sample_points();
    let mut min_eig = f64::INFINITY;
    for x in &samples {
        let g = metric.tensor(x, lambda);
        if g.nrows() != metric.dim() || g.ncols() != metric.dim() {
            return Err(Error::DimensionMismatch {
                field: "metric.eval",
                expected: metric.dim(),
                found: g.nrows(),
            });
        }
        if g.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFiniteMetric { x: x.clone() });
        }
        let sym = (&g + g.transpose()) * 0.5;
        let e = sym.symmetric_eigenvalues().min();
        if e <= 0.0 {
            return Err(Error::MetricNotPositiveDefinite { x: x.clone() });
        }
        min_eig = min_eig.min(e);
    }

    let unbounded = crate::types::ParameterDomain::unbounded(lambda.names());
    let mut sigma_finite = true;
    for x in &samples {
        for rho in 0..lambda.dim() {
            match diffops::d_log_det_g(metric, x, lambda, rho, &unbounded, fd) {
                Ok(v) if v.is_finite() => {}
                _ => sigma_finite = false,
            }
        }
    }

    let norm = quadrature::integrate(
        |x| psi.eval(x, lambda, n).norm_sqr() * metric.sqrt_det(x, lambda) + Complex::new(0.0, 0.0),
        domain,
        quad,
    )?;

    Ok(ModelReport {
        metric_samples: samples.len(),
        min_metric_eigenvalue: min_eig,
        norm: norm.value.re,
        norm_error: norm.error,
        norm_deviation: (norm.value.re - 1.0).abs(),
        sigma_samples: samples.len() * lambda.dim(),
        sigma_finite,
    })
}
