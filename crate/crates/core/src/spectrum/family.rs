//! Wavefunction families built from numerical eigenvectors.
//!
//! Every parameter point gets its own solve on a grid fixed at the centre point, so
//! eigenvectors at neighbouring points live on the same nodes and can be sign
//! aligned by their weighted overlap with the centre solution. Solves at the
//! centre and at its finite-difference stencil are done up front; other points are
//! solved on demand and cached.

use std::cell::RefCell;
use std::collections::HashMap;
use std::sync::{Arc, Mutex};

use rayon::prelude::*;

use super::spline::UniformSpline;
use super::{solve_levels_on, Boundary, Level};
use crate::diffops::{derivative, FdConfig, FdScheme};
use crate::domain::{Axis, Domain, Segment};
use crate::error::{Error, Result};
use crate::geometry::gauss_legendre;
use crate::models::ModelSpec;
use crate::types::{ParameterPoint, QuantumSystem, WavefunctionFamily};
use crate::Complex;

#[derive(Debug, Clone, PartialEq)]
pub struct FamilyConfig {
    pub points: usize,
    /// Number of levels kept, starting from the ground state.
    pub levels: usize,
    /// Must match the finite-difference configuration the geometry will use.
    pub fd: FdConfig,
    /// Adjacent levels closer than this are refused.
    pub gap_threshold: f64,
}

impl Default for FamilyConfig {
    fn default() -> Self {
        Self {
            points: super::DEFAULT_POINTS,
            levels: 3,
            fd: FdConfig {
                base_step: 1e-3,
                scheme: FdScheme::Central4,
                allow_one_sided: false,
            },
            gap_threshold: 1e-6,
        }
    }
}

/// The interpolating family together with a system that integrates it over the
/// grid's finite range.
#[derive(Clone, Debug)]
pub struct NumericalFamily {
    pub psi: WavefunctionFamily,
    pub system: QuantumSystem,
    pub center: ParameterPoint,
    pub energies: Vec<f64>,
}

struct Solution {
    splines: Vec<UniformSpline>,
}

struct Solver {
    model: ModelSpec,
    range: (f64, f64),
    cfg: FamilyConfig,
    reference: Mutex<Option<Arc<Vec<Level>>>>,
    cache: Mutex<HashMap<Vec<u64>, Arc<Solution>>>,
}

fn key(l: &ParameterPoint) -> Vec<u64> {
    l.values().iter().map(|v| v.to_bits()).collect()
}

impl Solver {
    fn levels(&self, lambda: &ParameterPoint) -> Result<Vec<Level>> {
        let levels = solve_levels_on(&self.model, lambda, self.cfg.levels, self.cfg.points, self.range)?;
        for (i, pair) in levels.windows(2).enumerate() {
            let gap = pair[1].energy - pair[0].energy;
            if gap < self.cfg.gap_threshold {
                return Err(Error::LevelCrossing { a: i, b: i + 1, gap });
            }
        }
        Ok(levels)
    }

    fn solve(&self, lambda: &ParameterPoint) -> Result<Arc<Solution>> {
        let k = key(lambda);
        if let Some(s) = self.cache.lock().expect("cache lock").get(&k) {
            return Ok(Arc::clone(s));
        }
        let reference = self.reference.lock().expect("reference lock").clone();
        let mut levels = self.levels(lambda)?;
        if let Some(reference) = reference {
            for (n, (lev, r)) in levels.iter_mut().zip(reference.iter()).enumerate() {
                let overlap: f64 = (0..lev.vector.len()).map(|i| lev.vector[i] * lev.weights[i] * r.vector[i]).sum();
                if lev.sector != r.sector || overlap.abs() < 0.5 {
                    let other = if n + 1 < reference.len() { n + 1 } else { n.saturating_sub(1) };
                    return Err(Error::LevelCrossing {
                        a: n,
                        b: other,
                        gap: (reference[other].energy - r.energy).abs(),
                    });
                }
                if overlap < 0.0 {
                    for v in &mut lev.vector {
                        *v = -*v;
                    }
                }
            }
        }
        let splines = levels.iter().map(|l| self.interpolant(lambda, l)).collect::<Result<Vec<_>>>()?;
        let sol = Arc::new(Solution { splines });
        self.cache.lock().expect("cache lock").insert(k, Arc::clone(&sol));
        Ok(sol)
    }

    /// Spline through the cell values plus one reflected ghost node per end,
    /// rescaled so that `∫ w s² dq = 1` holds for the interpolant itself.
    fn interpolant(&self, lambda: &ParameterPoint, level: &Level) -> Result<UniformSpline> {
        let g = &level.grid;
        let h = g.spacing;
        let ghost = |b: Boundary, v: f64| if b == Boundary::Neumann { v } else { -v };
        let n = level.vector.len();
        let mut nodes = Vec::with_capacity(n + 2);
        nodes.push(ghost(g.left, level.vector[0]));
        nodes.extend_from_slice(&level.vector);
        nodes.push(ghost(g.right, level.vector[n - 1]));
        let spline = UniformSpline::new(g.lo - 0.5 * h, h, nodes);

        let setup = self.model.spectral.as_ref().expect("checked at construction");
        let map = (setup.map)(lambda);
        let metric = &self.model.system.metric;
        let (gx, gw) = gauss_legendre(4);
        let cells = n;
        let mut norm = 0.0;
        for c in 0..cells {
            let a = g.lo + c as f64 * h;
            for (xi, wi) in gx.iter().zip(&gw) {
                let q = a + 0.5 * h * (1.0 + xi);
                let x = map.to_x(q);
                let w = metric.sqrt_det(&[x], lambda) * map.jacobian(q);
                norm += 0.5 * h * wi * w * spline.eval(q).powi(2);
            }
        }
        if !(norm.is_finite() && norm > 0.0) {
            return Err(Error::NotNormalized { norm });
        }
        let scale = 1.0 / norm.sqrt();
        let values: Vec<f64> = (0..n + 2).map(|j| spline.eval(g.lo - 0.5 * h + j as f64 * h) * scale).collect();
        Ok(UniformSpline::new(g.lo - 0.5 * h, h, values))
    }
}

/// Numerical eigenfunctions of `model` around `center`, usable wherever an analytic
/// family is. The family has no analytic parameter gradient; geometry differentiates
/// it with `cfg.fd`, whose stencil is precomputed here.
pub fn numerical_wavefunction_family(model: &ModelSpec, center: &ParameterPoint, cfg: &FamilyConfig) -> Result<NumericalFamily> {
    let setup = model
        .spectral
        .clone()
        .ok_or_else(|| Error::InvalidConfig(format!("{} has no one-dimensional spectral problem", model.name)))?;
    if cfg.levels == 0 {
        return Err(Error::InvalidConfig("numerical family needs at least one level".into()));
    }
    cfg.fd.validate()?;
    model.system.parameters.check(center)?;
    let range = (setup.q_range)(center, cfg.levels);
    let solver = Arc::new(Solver {
        model: model.clone(),
        range,
        cfg: cfg.clone(),
        reference: Mutex::new(None),
        cache: Mutex::new(HashMap::new()),
    });
    let reference = Arc::new(solver.levels(center)?);
    let energies = reference.iter().map(|l| l.energy).collect();
    *solver.reference.lock().expect("reference lock") = Some(Arc::clone(&reference));
    solver.solve(center)?;

    // Record the stencil by running the differentiator on a probe.
    let stencil = RefCell::new(Vec::new());
    for rho in 0..center.dim() {
        derivative(
            |p| {
                stencil.borrow_mut().push(p.clone());
                0.0
            },
            center,
            rho,
            &model.system.parameters,
            &cfg.fd,
        )?;
    }
    stencil
        .into_inner()
        .par_iter()
        .map(|p| solver.solve(p).map(|_| ()))
        .collect::<Result<Vec<()>>>()?;

    let mirror = setup.even_mirror;
    let factor = if mirror { std::f64::consts::FRAC_1_SQRT_2 } else { 1.0 };
    let s = Arc::clone(&solver);
    let map_fn = Arc::clone(&setup.map);
    let psi = WavefunctionFamily::new(format!("{} (numerical)", model.name), 1, move |x, l, n| {
        let Ok(sol) = s.solve(l) else {
            return Complex::new(f64::NAN, 0.0);
        };
        let Some(spline) = sol.splines.get(n.level() as usize) else {
            return Complex::new(f64::NAN, 0.0);
        };
        let u = map_fn(l).to_u(x[0]);
        let q = if mirror { u.abs() } else { u };
        Complex::new(spline.eval(q) * factor, 0.0)
    });

    let map_fn = Arc::clone(&setup.map);
    let (lo, hi) = range;
    let system = QuantumSystem::new(psi.clone(), model.system.metric.clone(), model.system.parameters.clone(), move |l| {
        let map = map_fn(l);
        let segments = if mirror {
            vec![
                Segment::new(-hi, 0.0).with_map(Arc::clone(&map)),
                Segment::new(0.0, hi).with_map(map),
            ]
        } else {
            vec![Segment::new(lo, hi).with_map(map)]
        };
        Domain::custom(vec![Axis::new(segments)])
    })?;
    Ok(NumericalFamily {
        psi,
        system,
        center: center.clone(),
        energies,
    })
}
