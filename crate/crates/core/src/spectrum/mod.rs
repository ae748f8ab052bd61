//! One-dimensional Laplace–Beltrami eigenproblems.
//!
//! The Hamiltonian `−(ħ²/2)∇² + V` is discretized in a grid variable `q` with
//! `x = x(q)`. Writing `w(q) = sqrt(g_qq)` for the line element, the energy functional
//!
//! `E[φ] = ∫ [(ħ²/2)(1/w)(∂_qφ)² + w V φ²] dq`, `‖φ‖² = ∫ w φ² dq`
//!
//! is discretized on a cell-centred uniform grid. That gives a symmetric tridiagonal
//! `H` and a diagonal weight `W`, and the generalized problem `Hφ = E Wφ` is solved
//! by Sturm bisection plus inverse iteration on `W^{-1/2} H W^{-1/2}`.

mod family;
mod spline;

use std::fmt;
use std::sync::Arc;

use crate::domain::CoordinateMap;
use crate::error::{Error, Result};
use crate::models::ModelSpec;
use crate::types::ParameterPoint;

pub use family::{numerical_wavefunction_family, FamilyConfig, NumericalFamily};
pub use spline::UniformSpline;

pub type MapFn = dyn Fn(&ParameterPoint) -> Arc<dyn CoordinateMap> + Send + Sync;
pub type Potential1D = dyn Fn(f64, &ParameterPoint) -> f64 + Send + Sync;
/// Grid range `(lo, hi)` in `q` that holds the lowest `levels` states.
pub type RangeFn = dyn Fn(&ParameterPoint, usize) -> (f64, f64) + Send + Sync;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Boundary {
    /// `φ = 0` on the boundary face.
    Dirichlet,
    /// `∂φ = 0` on the boundary face.
    Neumann,
}

/// Boundary conditions of one symmetry sector.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Sector {
    pub left: Boundary,
    pub right: Boundary,
}

/// How a model's 1-D spectral problem is posed in the grid variable.
#[derive(Clone)]
pub struct SpectralSetup {
    /// `q ↦ x` at each parameter point.
    pub map: Arc<MapFn>,
    /// Potential of the (possibly similarity-transformed) real operator.
    pub potential: Arc<Potential1D>,
    pub q_range: Arc<RangeFn>,
    /// Solved separately and merged by energy.
    pub sectors: Vec<Sector>,
    /// The state on the whole line is `φ(|q|)/sqrt 2`, with `q` on the half-line.
    pub even_mirror: bool,
}

impl fmt::Debug for SpectralSetup {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("SpectralSetup")
            .field("sectors", &self.sectors)
            .field("even_mirror", &self.even_mirror)
            .finish()
    }
}

/// Cell-centred uniform grid on `[lo, hi]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Grid1D {
    pub lo: f64,
    pub hi: f64,
    pub points: Vec<f64>,
    pub spacing: f64,
    pub left: Boundary,
    pub right: Boundary,
}

impl Grid1D {
    pub fn cell_centered(lo: f64, hi: f64, count: usize, left: Boundary, right: Boundary) -> Result<Self> {
        if count < 3 {
            return Err(Error::InvalidConfig(format!("grid needs at least 3 points, got {count}")));
        }
        if !(lo.is_finite() && hi.is_finite() && hi > lo) {
            return Err(Error::InvalidConfig(format!("bad grid range [{lo}, {hi}]")));
        }
        let h = (hi - lo) / count as f64;
        Ok(Self {
            lo,
            hi,
            points: (0..count).map(|i| lo + (i as f64 + 0.5) * h).collect(),
            spacing: h,
            left,
            right,
        })
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

/// Symmetric tridiagonal `H` and diagonal `W`.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteHamiltonian {
    pub diag: Vec<f64>,
    pub off: Vec<f64>,
    pub weights: Vec<f64>,
    pub grid: Grid1D,
}

impl DiscreteHamiltonian {
    pub fn len(&self) -> usize {
        self.diag.len()
    }

    pub fn is_empty(&self) -> bool {
        self.diag.is_empty()
    }

    pub fn apply(&self, v: &[f64]) -> Vec<f64> {
        let n = self.len();
        (0..n)
            .map(|i| {
                let mut s = self.diag[i] * v[i];
                if i > 0 {
                    s += self.off[i - 1] * v[i - 1];
                }
                if i + 1 < n {
                    s += self.off[i] * v[i + 1];
                }
                s
            })
            .collect()
    }
}

/// Assembles `H` and `W` for `model` at `lambda` on the given grid.
pub fn build_hamiltonian(model: &ModelSpec, lambda: &ParameterPoint, grid: &Grid1D) -> Result<DiscreteHamiltonian> {
    let setup = model.spectral.as_ref().ok_or_else(|| {
        Error::InvalidConfig(format!("{} has no one-dimensional spectral problem", model.name))
    })?;
    model.system.parameters.check(lambda)?;
    let map = (setup.map)(lambda);
    let metric = &model.system.metric;
    let line = |q: f64| {
        let x = map.to_x(q);
        (x, metric.sqrt_det(&[x], lambda) * map.jacobian(q))
    };
    assemble(grid, model.hbar, |q| {
        let (x, w) = line(q);
        (w, (setup.potential)(x, lambda))
    })
}

/// Assembly from a line element and potential given directly in `q`.
pub fn assemble<F>(grid: &Grid1D, hbar: f64, line_and_potential: F) -> Result<DiscreteHamiltonian>
where
    F: Fn(f64) -> (f64, f64),
{
    let n = grid.len();
    let h = grid.spacing;
    let mut w = Vec::with_capacity(n);
    let mut v = Vec::with_capacity(n);
    for &q in &grid.points {
        let (wq, vq) = line_and_potential(q);
        if !(wq.is_finite() && wq > 0.0) {
            return Err(Error::NonPositiveWeight { u: q });
        }
        if !vq.is_finite() {
            return Err(Error::NonFiniteIntegrand { x: vec![q] });
        }
        w.push(wq);
        v.push(vq);
    }
    let k = 0.5 * hbar * hbar;
    let mut diag: Vec<f64> = (0..n).map(|i| w[i] * h * v[i]).collect();
    let mut off = vec![0.0; n - 1];
    for i in 0..n - 1 {
        let a = 0.5 * (1.0 / w[i] + 1.0 / w[i + 1]);
        let c = k * a / h;
        diag[i] += c;
        diag[i + 1] += c;
        off[i] = -c;
    }
    // Dirichlet faces sit half a cell from the outer nodes.
    if grid.left == Boundary::Dirichlet {
        diag[0] += 2.0 * k / (w[0] * h);
    }
    if grid.right == Boundary::Dirichlet {
        diag[n - 1] += 2.0 * k / (w[n - 1] * h);
    }
    let weights = w.iter().map(|wi| wi * h).collect();
    Ok(DiscreteHamiltonian {
        diag,
        off,
        weights,
        grid: grid.clone(),
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct EigenPair {
    pub energy: f64,
    /// W-normalized: `φᵀ W φ = 1`.
    pub vector: Vec<f64>,
    /// `‖Hφ − EWφ‖ / ‖Wφ‖`.
    pub residual: f64,
}

const MAX_INVERSE_ITERATIONS: usize = 8;

/// The `k` lowest eigenpairs of `Hφ = E Wφ`.
pub fn eigensolve(dh: &DiscreteHamiltonian, k: usize) -> Result<Vec<EigenPair>> {
    let n = dh.len();
    if k > n {
        return Err(Error::InvalidConfig(format!("asked for {k} eigenpairs of a {n}-point problem")));
    }
    let s: Vec<f64> = dh.weights.iter().map(|w| 1.0 / w.sqrt()).collect();
    let d: Vec<f64> = (0..n).map(|i| dh.diag[i] * s[i] * s[i]).collect();
    let e: Vec<f64> = (0..n - 1).map(|i| dh.off[i] * s[i] * s[i + 1]).collect();
    let norm = (0..n)
        .map(|i| d[i].abs() + if i > 0 { e[i - 1].abs() } else { 0.0 } + e.get(i).map_or(0.0, |v| v.abs()))
        .fold(0.0, f64::max);

    let mut out: Vec<EigenPair> = Vec::with_capacity(k);
    let mut previous: Vec<Vec<f64>> = Vec::with_capacity(k);
    for j in 0..k {
        let energy = bisect(&d, &e, j, norm);
        let mut y: Vec<f64> = (0..n).map(|i| 1.0 + 0.25 * ((i * 7 + j * 3) as f64).sin()).collect();
        let mut residual = f64::INFINITY;
        let shift = energy - 4.0 * f64::EPSILON * norm;
        for _ in 0..MAX_INVERSE_ITERATIONS {
            y = solve_shifted(&d, &e, shift, &y, norm);
            // Against nearby converged vectors, for clusters.
            for p in &previous {
                let c: f64 = y.iter().zip(p).map(|(a, b)| a * b).sum();
                for (yi, pi) in y.iter_mut().zip(p) {
                    *yi -= c * pi;
                }
            }
            let len = y.iter().map(|v| v * v).sum::<f64>().sqrt();
            for v in &mut y {
                *v /= len;
            }
            residual = (0..n)
                .map(|i| {
                    let mut r = (d[i] - energy) * y[i];
                    if i > 0 {
                        r += e[i - 1] * y[i - 1];
                    }
                    if i + 1 < n {
                        r += e[i] * y[i + 1];
                    }
                    r * r
                })
                .sum::<f64>()
                .sqrt();
            if residual <= 1e3 * f64::EPSILON * norm {
                break;
            }
        }
        if residual.is_nan() || residual > 1e5 * f64::EPSILON * norm {
            return Err(Error::EigenNonConvergence {
                iterations: MAX_INVERSE_ITERATIONS,
            });
        }
        previous.push(y.clone());
        let mut phi: Vec<f64> = y.iter().zip(&s).map(|(a, b)| a * b).collect();
        // Sign: the first sizable entry from the left is positive.
        let peak = phi.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        if phi.iter().find(|v| v.abs() > 1e-3 * peak).is_some_and(|v| *v < 0.0) {
            for v in &mut phi {
                *v = -*v;
            }
        }
        let hphi = dh.apply(&phi);
        let num: f64 = (0..n).map(|i| (hphi[i] - energy * dh.weights[i] * phi[i]).powi(2)).sum();
        let den: f64 = (0..n).map(|i| (dh.weights[i] * phi[i]).powi(2)).sum();
        out.push(EigenPair {
            energy,
            vector: phi,
            residual: (num / den).sqrt(),
        });
    }
    Ok(out)
}

/// Number of eigenvalues of the tridiagonal `(d, e)` below `x`.
fn sturm_count(d: &[f64], e: &[f64], x: f64, tiny: f64) -> usize {
    let mut count = 0;
    let mut q = d[0] - x;
    for i in 0..d.len() {
        if i > 0 {
            q = d[i] - x - e[i - 1] * e[i - 1] / q;
        }
        if q == 0.0 {
            q = -tiny;
        }
        if q < 0.0 {
            count += 1;
        }
    }
    count
}

/// The `j`-th smallest eigenvalue by bisection.
fn bisect(d: &[f64], e: &[f64], j: usize, norm: f64) -> f64 {
    let n = d.len();
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for i in 0..n {
        let r = if i > 0 { e[i - 1].abs() } else { 0.0 } + e.get(i).map_or(0.0, |v| v.abs());
        lo = lo.min(d[i] - r);
        hi = hi.max(d[i] + r);
    }
    let tiny = f64::EPSILON * norm.max(f64::MIN_POSITIVE);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if hi - lo <= 2.0 * f64::EPSILON * (lo.abs() + hi.abs()) + tiny * 1e-3 || mid == lo || mid == hi {
            break;
        }
        if sturm_count(d, e, mid, tiny) > j {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Solves `(T − μ) y = b` by tridiagonal LU with partial pivoting.
fn solve_shifted(d: &[f64], e: &[f64], mu: f64, b: &[f64], norm: f64) -> Vec<f64> {
    let n = d.len();
    let tiny = f64::EPSILON * norm.max(f64::MIN_POSITIVE);
    let mut dl = e.to_vec();
    let mut du = e.to_vec();
    let mut dd: Vec<f64> = d.iter().map(|v| v - mu).collect();
    let mut du2 = vec![0.0; n.saturating_sub(2)];
    let mut swapped = vec![false; n.saturating_sub(1)];
    for i in 0..n - 1 {
        if dd[i].abs() >= dl[i].abs() {
            if dd[i] == 0.0 {
                dd[i] = tiny;
            }
            let f = dl[i] / dd[i];
            dl[i] = f;
            dd[i + 1] -= f * du[i];
        } else {
            let f = dd[i] / dl[i];
            dd[i] = dl[i];
            dl[i] = f;
            let t = du[i];
            du[i] = dd[i + 1];
            dd[i + 1] = t - f * dd[i + 1];
            if i + 2 < n {
                du2[i] = du[i + 1];
                du[i + 1] *= -f;
            }
            swapped[i] = true;
        }
    }
    if dd[n - 1] == 0.0 {
        dd[n - 1] = tiny;
    }
    let mut y = b.to_vec();
    for i in 0..n - 1 {
        if swapped[i] {
            let t = y[i];
            y[i] = y[i + 1];
            y[i + 1] = t - dl[i] * y[i];
        } else {
            y[i + 1] -= dl[i] * y[i];
        }
    }
    y[n - 1] /= dd[n - 1];
    if n > 1 {
        y[n - 2] = (y[n - 2] - du[n - 2] * y[n - 1]) / dd[n - 2];
    }
    for i in (0..n.saturating_sub(2)).rev() {
        y[i] = (y[i] - du[i] * y[i + 1] - du2[i] * y[i + 2]) / dd[i];
    }
    y
}

/// One merged level of a model's spectrum.
#[derive(Debug, Clone, PartialEq)]
pub struct Level {
    pub energy: f64,
    pub residual: f64,
    /// Index into the model's sectors.
    pub sector: usize,
    pub vector: Vec<f64>,
    pub grid: Arc<Grid1D>,
    pub weights: Vec<f64>,
}

/// Default grid size; the acceptance tolerances need at least 2000.
pub const DEFAULT_POINTS: usize = 4000;

/// The `k` lowest levels over all sectors of the model at `lambda`.
pub fn solve_levels(model: &ModelSpec, lambda: &ParameterPoint, k: usize, points: usize) -> Result<Vec<Level>> {
    let setup = model.spectral.as_ref().ok_or_else(|| {
        Error::InvalidConfig(format!("{} has no one-dimensional spectral problem", model.name))
    })?;
    if k == 0 {
        return Ok(Vec::new());
    }
    let (lo, hi) = (setup.q_range)(lambda, k);
    solve_levels_on(model, lambda, k, points, (lo, hi))
}

pub(crate) fn solve_levels_on(
    model: &ModelSpec,
    lambda: &ParameterPoint,
    k: usize,
    points: usize,
    range: (f64, f64),
) -> Result<Vec<Level>> {
    let setup = model.spectral.as_ref().ok_or_else(|| {
        Error::InvalidConfig(format!("{} has no one-dimensional spectral problem", model.name))
    })?;
    let mut levels = Vec::new();
    for (si, sector) in setup.sectors.iter().enumerate() {
        let grid = Arc::new(Grid1D::cell_centered(range.0, range.1, points, sector.left, sector.right)?);
        let dh = build_hamiltonian(model, lambda, &grid)?;
        for pair in eigensolve(&dh, k.min(points))? {
            levels.push(Level {
                energy: pair.energy,
                residual: pair.residual,
                sector: si,
                vector: pair.vector,
                grid: Arc::clone(&grid),
                weights: dh.weights.clone(),
            });
        }
    }
    levels.sort_by(|a, b| a.energy.total_cmp(&b.energy));
    levels.truncate(k);
    Ok(levels)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn oscillator(points: usize, half: f64) -> DiscreteHamiltonian {
        let g = Grid1D::cell_centered(-half, half, points, Boundary::Dirichlet, Boundary::Dirichlet).unwrap();
        assemble(&g, 1.0, |q| (1.0, 0.5 * q * q)).unwrap()
    }

    #[test]
    fn particle_in_a_box() {
        let g = Grid1D::cell_centered(0.0, 1.0, 800, Boundary::Dirichlet, Boundary::Dirichlet).unwrap();
        let dh = assemble(&g, 1.0, |_| (1.0, 0.0)).unwrap();
        let pairs = eigensolve(&dh, 3).unwrap();
        for (j, p) in pairs.iter().enumerate() {
            let exact = 0.5 * (std::f64::consts::PI * (j + 1) as f64).powi(2);
            assert!((p.energy - exact).abs() < 1e-4 * exact, "{j}: {} vs {exact}", p.energy);
        }
    }

    #[test]
    fn neumann_box_has_zero_mode() {
        let g = Grid1D::cell_centered(0.0, 1.0, 200, Boundary::Neumann, Boundary::Neumann).unwrap();
        let dh = assemble(&g, 1.0, |_| (1.0, 0.0)).unwrap();
        let pairs = eigensolve(&dh, 2).unwrap();
        assert!(pairs[0].energy.abs() < 1e-10);
        assert!((pairs[1].energy - 0.5 * std::f64::consts::PI.powi(2)).abs() < 1e-3);
    }

    #[test]
    fn vectors_are_weight_orthonormal() {
        let dh = oscillator(600, 9.0);
        let pairs = eigensolve(&dh, 5).unwrap();
        for (i, a) in pairs.iter().enumerate() {
            for (j, b) in pairs.iter().enumerate() {
                let ip: f64 = (0..dh.len()).map(|k| a.vector[k] * dh.weights[k] * b.vector[k]).sum();
                let expect = if i == j { 1.0 } else { 0.0 };
                assert!((ip - expect).abs() < 1e-8, "({i},{j}) = {ip}");
            }
            assert!(a.residual < 1e-8, "{}", a.residual);
        }
    }

    #[test]
    fn sturm_count_is_monotone() {
        let dh = oscillator(100, 6.0);
        let d = &dh.diag;
        let e = &dh.off;
        let mut last = 0;
        for k in 0..50 {
            let c = sturm_count(d, e, k as f64 * 10.0, 1e-300);
            assert!(c >= last);
            last = c;
        }
    }

    #[test]
    fn rejects_non_positive_weight() {
        let g = Grid1D::cell_centered(-1.0, 1.0, 10, Boundary::Dirichlet, Boundary::Dirichlet).unwrap();
        assert!(matches!(assemble(&g, 1.0, |q| (q, 0.0)), Err(Error::NonPositiveWeight { .. })));
    }
}
