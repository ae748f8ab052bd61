//! Integration regions over configuration space.
//!
//! A [`Domain`] is a product of one-dimensional [`Axis`] regions. Each axis is a
//! union of [`Segment`]s expressed in a quadrature variable `u`; a segment may carry
//! a [`CoordinateMap`] `x = x(u)` so that the quadrature runs in whatever variable
//! makes the integrand tame (for instance `u = exp(-k x)` for exponential metrics).

use std::fmt;
use std::sync::Arc;

/// Monotone bijection between a quadrature variable `u` and the coordinate `x`.
pub trait CoordinateMap: Send + Sync + fmt::Debug {
    fn to_x(&self, u: f64) -> f64;
    fn to_u(&self, x: f64) -> f64;
    /// `|dx/du|`, positive on the interior of the segment.
    fn jacobian(&self, u: f64) -> f64;
}

/// `u = exp(-rate * x)`, mapping the whole line onto `(0, inf)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExponentialMap {
    pub rate: f64,
}

impl CoordinateMap for ExponentialMap {
    fn to_x(&self, u: f64) -> f64 {
        -u.ln() / self.rate
    }

    fn to_u(&self, x: f64) -> f64 {
        (-self.rate * x).exp()
    }

    fn jacobian(&self, u: f64) -> f64 {
        1.0 / (self.rate.abs() * u)
    }
}

/// `u = sign(x) * coeff * x^2`, an odd monotone map of the line onto itself.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadraticMap {
    pub coeff: f64,
}

impl CoordinateMap for QuadraticMap {
    fn to_x(&self, u: f64) -> f64 {
        u.signum() * (u.abs() / self.coeff).sqrt()
    }

    fn to_u(&self, x: f64) -> f64 {
        x.signum() * self.coeff * x * x
    }

    fn jacobian(&self, u: f64) -> f64 {
        0.5 / (self.coeff * u.abs()).sqrt()
    }
}

/// `x = u`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IdentityMap;

impl CoordinateMap for IdentityMap {
    fn to_x(&self, u: f64) -> f64 {
        u
    }

    fn to_u(&self, x: f64) -> f64 {
        x
    }

    fn jacobian(&self, _: f64) -> f64 {
        1.0
    }
}

/// One interval `[lo, hi]` of the quadrature variable (bounds may be infinite).
#[derive(Clone)]
pub struct Segment {
    pub lo: f64,
    pub hi: f64,
    /// Characteristic length in `u`; sets the double-exponential node spread on
    /// unbounded segments.
    pub scale: f64,
    pub map: Option<Arc<dyn CoordinateMap>>,
    /// Interior points where the integrand is known to lose smoothness. Used to
    /// seed the adaptive subdivision on bounded segments.
    pub breakpoints: Vec<f64>,
}

impl fmt::Debug for Segment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Segment")
            .field("lo", &self.lo)
            .field("hi", &self.hi)
            .field("scale", &self.scale)
            .field("map", &self.map)
            .field("breakpoints", &self.breakpoints.len())
            .finish()
    }
}

impl Segment {
    pub fn new(lo: f64, hi: f64) -> Self {
        Self {
            lo,
            hi,
            scale: 1.0,
            map: None,
            breakpoints: Vec::new(),
        }
    }

    pub fn with_scale(mut self, scale: f64) -> Self {
        self.scale = scale;
        self
    }

    pub fn with_map(mut self, map: Arc<dyn CoordinateMap>) -> Self {
        self.map = Some(map);
        self
    }

    pub fn with_breakpoints(mut self, breakpoints: Vec<f64>) -> Self {
        self.breakpoints = breakpoints;
        self
    }

    pub fn is_bounded(&self) -> bool {
        self.lo.is_finite() && self.hi.is_finite()
    }

    #[inline]
    pub fn to_x(&self, u: f64) -> f64 {
        match &self.map {
            Some(m) => m.to_x(u),
            None => u,
        }
    }

    #[inline]
    pub fn jacobian(&self, u: f64) -> f64 {
        match &self.map {
            Some(m) => m.jacobian(u),
            None => 1.0,
        }
    }

    pub fn to_u(&self, x: f64) -> f64 {
        match &self.map {
            Some(m) => m.to_u(x),
            None => x,
        }
    }

    /// Coordinate range covered by the segment, ordered.
    pub fn x_bounds(&self) -> (f64, f64) {
        let a = self.to_x(self.lo);
        let b = self.to_x(self.hi);
        if a <= b {
            (a, b)
        } else {
            (b, a)
        }
    }

    /// A few interior points, spread the way the double-exponential rule spreads
    /// its nodes.
    pub fn sample_u(&self) -> Vec<f64> {
        let ts = [-1.5, -0.75, 0.0, 0.75, 1.5];
        ts.iter()
            .filter_map(|&t: &f64| {
                let y = std::f64::consts::FRAC_PI_2 * t.sinh();
                let u = match (self.lo.is_finite(), self.hi.is_finite()) {
                    (true, true) => {
                        0.5 * (self.lo + self.hi) + 0.5 * (self.hi - self.lo) * y.tanh()
                    }
                    (true, false) => self.lo + self.scale * y.exp(),
                    (false, true) => self.hi - self.scale * y.exp(),
                    (false, false) => self.scale * y.sinh(),
                };
                (u > self.lo && u < self.hi).then_some(u)
            })
            .collect()
    }
}

#[derive(Debug, Clone)]
pub struct Axis {
    pub segments: Vec<Segment>,
}

impl Axis {
    pub fn new(segments: Vec<Segment>) -> Self {
        Self { segments }
    }

    pub fn bounds(&self) -> (f64, f64) {
        self.segments
            .iter()
            .map(Segment::x_bounds)
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), (a, b)| {
                (lo.min(a), hi.max(b))
            })
    }

    pub fn sample_x(&self) -> Vec<f64> {
        self.segments
            .iter()
            .flat_map(|s| s.sample_u().into_iter().map(move |u| s.to_x(u)))
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DomainKind {
    FullLine,
    HalfLine,
    ProductOf1D,
    Custom,
}

#[derive(Debug, Clone)]
pub struct Domain {
    kind: DomainKind,
    axes: Vec<Axis>,
}

impl Domain {
    /// `(-inf, inf)` as a single double-exponential segment.
    pub fn full_line(scale: f64) -> Self {
        Self {
            kind: DomainKind::FullLine,
            axes: vec![Axis::new(vec![
                Segment::new(f64::NEG_INFINITY, f64::INFINITY).with_scale(scale)
            ])],
        }
    }

    /// `(-inf, inf)` split at `at`; needed when the integrand has a kink there
    /// (for instance `sqrt(g) ~ |x|`).
    pub fn full_line_split(at: f64, scale: f64) -> Self {
        Self {
            kind: DomainKind::FullLine,
            axes: vec![Axis::new(vec![
                Segment::new(f64::NEG_INFINITY, at).with_scale(scale),
                Segment::new(at, f64::INFINITY).with_scale(scale),
            ])],
        }
    }

    pub fn half_line(lo: f64, scale: f64) -> Self {
        Self {
            kind: DomainKind::HalfLine,
            axes: vec![Axis::new(vec![
                Segment::new(lo, f64::INFINITY).with_scale(scale)
            ])],
        }
    }

    pub fn interval(lo: f64, hi: f64) -> Self {
        Self::custom(vec![Axis::new(vec![Segment::new(lo, hi)])])
    }

    pub fn custom(axes: Vec<Axis>) -> Self {
        Self {
            kind: DomainKind::Custom,
            axes,
        }
    }

    /// Tensor product of one-dimensional domains.
    pub fn product(parts: Vec<Domain>) -> Self {
        Self {
            kind: DomainKind::ProductOf1D,
            axes: parts.into_iter().flat_map(|d| d.axes).collect(),
        }
    }

    pub fn kind(&self) -> DomainKind {
        self.kind
    }

    pub fn dim(&self) -> usize {
        self.axes.len()
    }

    pub fn axes(&self) -> &[Axis] {
        &self.axes
    }

    pub fn axis(&self, i: usize) -> Option<&Axis> {
        self.axes.get(i)
    }

    pub fn bounds(&self) -> Vec<(f64, f64)> {
        self.axes.iter().map(Axis::bounds).collect()
    }

    /// Deterministic grid of interior sample points (tensor product of per-axis
    /// samples).
    pub fn sample_points(&self) -> Vec<Vec<f64>> {
        let mut pts: Vec<Vec<f64>> = vec![Vec::new()];
        for axis in &self.axes {
            let xs = axis.sample_x();
            pts = pts
                .into_iter()
                .flat_map(|p| {
                    xs.iter().map(move |&x| {
                        let mut q = p.clone();
                        q.push(x);
                        q
                    })
                })
                .collect();
        }
        pts
    }
}
