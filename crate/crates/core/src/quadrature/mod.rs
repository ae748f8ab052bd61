//! Adaptive integration of complex (scalar or vector) integrands over a [`Domain`].
//!
//! Bounded segments use adaptive Gauss–Kronrod subdivision; unbounded segments use
//! double-exponential rules unless another scheme is requested. Vector integrands
//! share every function evaluation across components, which is how all brackets of
//! a geometric tensor come out of a single pass.

mod de;
mod kronrod;

use std::cell::Cell;

use crate::domain::{Axis, Domain, Segment};
use crate::error::{Error, Result};
use crate::Complex;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum Scheme {
    /// Gauss–Kronrod on bounded segments, double-exponential on unbounded ones.
    #[default]
    Auto,
    AdaptiveGaussKronrod,
    DoubleExponential,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadratureConfig {
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub max_subdivisions: usize,
    /// Maximum number of step halvings of the double-exponential rule.
    pub max_level: usize,
    pub scheme: Scheme,
}

impl Default for QuadratureConfig {
    fn default() -> Self {
        Self {
            rel_tol: 1e-10,
            abs_tol: 1e-12,
            max_subdivisions: 2000,
            max_level: 10,
            scheme: Scheme::Auto,
        }
    }
}

impl QuadratureConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.rel_tol > 0.0 && self.abs_tol > 0.0) {
            return Err(Error::InvalidConfig("quadrature tolerances must be positive".into()));
        }
        if self.max_subdivisions < 1 {
            return Err(Error::InvalidConfig("max_subdivisions must be at least 1".into()));
        }
        Ok(())
    }

    /// Bits identifying the configuration, for cache keys.
    pub(crate) fn key(&self) -> [u64; 5] {
        [
            self.rel_tol.to_bits(),
            self.abs_tol.to_bits(),
            self.max_subdivisions as u64,
            self.max_level as u64,
            self.scheme as u64,
        ]
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Integral {
    pub value: Complex,
    pub error: f64,
    pub evaluations: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct VecIntegral {
    pub value: Vec<Complex>,
    pub error: Vec<f64>,
    pub evaluations: usize,
}

#[derive(Debug, Clone, Copy)]
pub(crate) struct Tol {
    rel: f64,
    abs: f64,
}

impl Tol {
    fn bound(&self, magnitude: f64) -> f64 {
        self.abs.max(self.rel * magnitude)
    }

    fn halved(self) -> Self {
        Self {
            rel: 0.5 * self.rel,
            abs: 0.5 * self.abs,
        }
    }
}

/// One-dimensional integrand in the configuration coordinate `x`, writing its
/// components into the output slice.
pub(crate) type SegmentIntegrand<'f> = dyn FnMut(f64, &mut [Complex]) -> Result<()> + 'f;

fn integrate_segment(
    f: &mut SegmentIntegrand<'_>,
    seg: &Segment,
    ncomp: usize,
    ncheck: usize,
    tol: Tol,
    cfg: &QuadratureConfig,
) -> Result<VecIntegral> {
    let use_de = match cfg.scheme {
        Scheme::Auto => !seg.is_bounded(),
        Scheme::DoubleExponential => true,
        Scheme::AdaptiveGaussKronrod => false,
    };
    if use_de {
        de::integrate(f, seg, ncomp, ncheck, tol, cfg.max_level)
    } else {
        kronrod::integrate(f, seg, ncomp, ncheck, tol, cfg.max_subdivisions)
    }
}

fn integrate_axis(
    f: &mut SegmentIntegrand<'_>,
    axis: &Axis,
    ncomp: usize,
    ncheck: usize,
    tol: Tol,
    cfg: &QuadratureConfig,
) -> Result<VecIntegral> {
    let mut out = VecIntegral {
        value: vec![Complex::new(0.0, 0.0); ncomp],
        error: vec![0.0; ncomp],
        evaluations: 0,
    };
    for seg in &axis.segments {
        let r = integrate_segment(f, seg, ncomp, ncheck, tol, cfg)?;
        for i in 0..ncomp {
            out.value[i] += r.value[i];
            out.error[i] += r.error[i];
        }
        out.evaluations += r.evaluations;
    }
    Ok(out)
}

/// Integrates a vector-valued integrand with `ncomp` components over a 1-D or
/// 2-D domain. Every component is driven to the tolerance.
pub fn integrate_vec<F>(mut f: F, ncomp: usize, domain: &Domain, cfg: &QuadratureConfig) -> Result<VecIntegral>
where
    F: FnMut(&[f64], &mut [Complex]) -> Result<()>,
{
    cfg.validate()?;
    let tol = Tol {
        rel: cfg.rel_tol,
        abs: cfg.abs_tol,
    };
    match domain.axes() {
        [ax] => integrate_axis(&mut |x, out| f(&[x], out), ax, ncomp, ncomp, tol, cfg),
        [ax, ay] => integrate_product_axes(&mut f, ax, ay, ncomp, tol, cfg),
        axes => Err(Error::InvalidConfig(format!(
            "integration supports 1 or 2 dimensions, got {}",
            axes.len()
        ))),
    }
}

/// Iterated integration over `ax × ay`. The inner integral is carried with its
/// error estimate as extra components so that the reported error covers both.
fn integrate_product_axes<F>(
    f: &mut F,
    ax: &Axis,
    ay: &Axis,
    ncomp: usize,
    tol: Tol,
    cfg: &QuadratureConfig,
) -> Result<VecIntegral>
where
    F: FnMut(&[f64], &mut [Complex]) -> Result<()>,
{
    let half = tol.halved();
    let inner_evals = Cell::new(0usize);
    let mut outer = |x: f64, out: &mut [Complex]| -> Result<()> {
        let inner = integrate_axis(&mut |y, buf| f(&[x, y], buf), ay, ncomp, ncomp, half, cfg)?;
        inner_evals.set(inner_evals.get() + inner.evaluations);
        out[..ncomp].copy_from_slice(&inner.value);
        for (o, e) in out[ncomp..].iter_mut().zip(&inner.error) {
            *o = Complex::new(*e, 0.0);
        }
        Ok(())
    };
    let r = integrate_axis(&mut outer, ax, 2 * ncomp, ncomp, half, cfg)?;
    Ok(VecIntegral {
        value: r.value[..ncomp].to_vec(),
        error: (0..ncomp).map(|i| r.error[i] + r.value[ncomp + i].re.abs()).collect(),
        evaluations: inner_evals.get(),
    })
}

/// `∫ f(x) d^N x` over the domain.
pub fn integrate<F>(f: F, domain: &Domain, cfg: &QuadratureConfig) -> Result<Integral>
where
    F: Fn(&[f64]) -> Complex,
{
    let r = integrate_vec(
        |x, out| {
            out[0] = f(x);
            Ok(())
        },
        1,
        domain,
        cfg,
    )?;
    Ok(Integral {
        value: r.value[0],
        error: r.error[0],
        evaluations: r.evaluations,
    })
}

/// `∫∫ f(x, y) dx dy` over the product of two one-dimensional domains.
pub fn integrate_2d_product<F>(f: F, domain_x: &Domain, domain_y: &Domain, cfg: &QuadratureConfig) -> Result<Integral>
where
    F: Fn(f64, f64) -> Complex,
{
    if domain_x.dim() != 1 || domain_y.dim() != 1 {
        return Err(Error::DimensionMismatch {
            field: "domain",
            expected: 1,
            found: domain_x.dim().max(domain_y.dim()),
        });
    }
    let d = Domain::product(vec![domain_x.clone(), domain_y.clone()]);
    integrate(|p| f(p[0], p[1]), &d, cfg)
}
