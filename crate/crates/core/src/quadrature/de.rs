//! Double-exponential (tanh-sinh / exp-sinh / sinh-sinh) rules on one segment.
//!
//! Nodes are nested under step halving, so every refinement level reuses all
//! previous function values. The error estimate is the change between the last
//! two levels.

use std::f64::consts::FRAC_PI_2;

use super::{SegmentIntegrand, Tol, VecIntegral};
use crate::domain::Segment;
use crate::error::{Error, Result};
use crate::Complex;

const H0: f64 = 0.5;
const T_CAP: f64 = 6.5;
const TAIL_START: f64 = 2.0;
const TAIL_RATIO: f64 = 1e-18;
const MIN_LEVEL: usize = 2;

/// Node position `u(t)` and weight `|du/dt|`, or `None` once the node has collapsed
/// onto an endpoint or overflowed.
fn node(seg: &Segment, t: f64) -> Option<(f64, f64)> {
    let s = FRAC_PI_2 * t.sinh();
    let dsdt = FRAC_PI_2 * t.cosh();
    let (u, w) = match (seg.lo.is_finite(), seg.hi.is_finite()) {
        (true, true) => {
            let d = 0.5 * (seg.hi - seg.lo);
            let e = (-2.0 * s.abs()).exp();
            // distance to the nearer endpoint, computed without cancellation
            let dist = 2.0 * d * e / (1.0 + e);
            let u = if t < 0.0 { seg.lo + dist } else { seg.hi - dist };
            let ch = s.cosh();
            (u, d * dsdt / (ch * ch))
        }
        (true, false) => {
            let e = s.exp();
            (seg.lo + seg.scale * e, seg.scale * e * dsdt)
        }
        (false, true) => {
            let e = s.exp();
            (seg.hi - seg.scale * e, seg.scale * e * dsdt)
        }
        (false, false) => (seg.scale * s.sinh(), seg.scale * dsdt * s.cosh()),
    };
    if !(u.is_finite() && w.is_finite()) || w == 0.0 || u <= seg.lo || u >= seg.hi {
        return None;
    }
    Some((u, w))
}

struct Evaluator<'a, 'f> {
    seg: &'a Segment,
    f: &'a mut SegmentIntegrand<'f>,
    buf: Vec<Complex>,
    evaluations: usize,
}

enum Term {
    Skip,
    Value,
    NonFinite(f64),
}

impl Evaluator<'_, '_> {
    /// Evaluates the weighted term at `t` into `self.buf`.
    fn term(&mut self, t: f64) -> Result<Term> {
        let Some((u, w)) = node(self.seg, t) else {
            return Ok(Term::Skip);
        };
        let x = self.seg.to_x(u);
        let factor = w * self.seg.jacobian(u);
        if !x.is_finite() || !factor.is_finite() || factor == 0.0 {
            return Ok(Term::Skip);
        }
        (self.f)(x, &mut self.buf)?;
        self.evaluations += 1;
        if self.buf.iter().any(|v| !(v.re.is_finite() && v.im.is_finite())) {
            return Ok(Term::NonFinite(x));
        }
        for v in self.buf.iter_mut() {
            *v *= factor;
        }
        Ok(Term::Value)
    }
}

fn max_norm(buf: &[Complex], ncheck: usize) -> f64 {
    buf[..ncheck].iter().fold(0.0, |m, v| m.max(v.norm()))
}

pub(super) fn integrate(
    f: &mut SegmentIntegrand<'_>,
    seg: &Segment,
    ncomp: usize,
    ncheck: usize,
    tol: Tol,
    max_level: usize,
) -> Result<VecIntegral> {
    let mut ev = Evaluator {
        seg,
        f,
        buf: vec![Complex::new(0.0, 0.0); ncomp],
        evaluations: 0,
    };
    let mut sum = vec![Complex::new(0.0, 0.0); ncomp];
    let mut l1 = vec![0.0; ncomp];
    let mut peak = 0.0f64;

    let accumulate = |buf: &[Complex], sum: &mut [Complex], l1: &mut [f64]| {
        for ((s, a), v) in sum.iter_mut().zip(l1.iter_mut()).zip(buf) {
            *s += *v;
            *a += v.norm();
        }
    };

    // Level 0: march outwards from t = 0 until the terms are negligible.
    match ev.term(0.0)? {
        Term::Value => {
            peak = max_norm(&ev.buf, ncheck);
            accumulate(&ev.buf, &mut sum, &mut l1);
        }
        Term::NonFinite(x) => return Err(Error::NonFiniteIntegrand { x: vec![x] }),
        Term::Skip => {}
    }
    let mut extent = [0usize; 2];
    for (side, sign) in [(0usize, -1.0f64), (1, 1.0)] {
        let mut small = 0;
        let mut k = 1usize;
        loop {
            let t = sign * k as f64 * H0;
            if t.abs() > T_CAP {
                break;
            }
            match ev.term(t)? {
                Term::Skip => break,
                Term::NonFinite(x) => {
                    if t.abs() >= TAIL_START && small > 0 {
                        break;
                    }
                    return Err(Error::NonFiniteIntegrand { x: vec![x] });
                }
                Term::Value => {
                    let mag = max_norm(&ev.buf, ncheck);
                    peak = peak.max(mag);
                    accumulate(&ev.buf, &mut sum, &mut l1);
                    extent[side] = k;
                    if t.abs() >= TAIL_START && mag <= TAIL_RATIO * peak {
                        small += 1;
                        if small >= 2 {
                            break;
                        }
                    } else {
                        small = 0;
                    }
                }
            }
            k += 1;
        }
    }
    let t_lo = -(extent[0] as f64) * H0;
    let t_hi = extent[1] as f64 * H0;

    let mut h = H0;
    let mut prev: Vec<Complex> = sum.iter().map(|s| s * h).collect();
    let mut err = vec![f64::INFINITY; ncomp];
    for level in 1..=max_level {
        h *= 0.5;
        let mut t = t_lo + h;
        while t < t_hi {
            match ev.term(t)? {
                Term::Value => accumulate(&ev.buf, &mut sum, &mut l1),
                Term::NonFinite(x) => return Err(Error::NonFiniteIntegrand { x: vec![x] }),
                Term::Skip => {}
            }
            t += 2.0 * h;
        }
        let cur: Vec<Complex> = sum.iter().map(|s| s * h).collect();
        let mut converged = level >= MIN_LEVEL;
        for i in 0..ncomp {
            err[i] = (cur[i] - prev[i]).norm();
            if i < ncheck {
                let floor = 50.0 * f64::EPSILON * h * l1[i];
                if err[i] > tol.bound(cur[i].norm()).max(floor) {
                    converged = false;
                }
            }
        }
        prev = cur;
        if converged {
            return Ok(VecIntegral {
                value: prev,
                error: err,
                evaluations: ev.evaluations,
            });
        }
    }
    let worst = (0..ncheck)
        .max_by(|&a, &b| err[a].total_cmp(&err[b]))
        .unwrap_or(0);
    Err(Error::QuadratureNonConvergence {
        best: prev[worst],
        estimate: err[worst],
        evaluations: ev.evaluations,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn nodes_stay_inside_and_avoid_endpoints() {
        let segs = [
            Segment::new(0.0, 1.0),
            Segment::new(0.0, f64::INFINITY),
            Segment::new(f64::NEG_INFINITY, 2.0),
            Segment::new(f64::NEG_INFINITY, f64::INFINITY),
        ];
        for seg in &segs {
            for k in -60..=60 {
                if let Some((u, w)) = node(seg, k as f64 * 0.1) {
                    assert!(u > seg.lo && u < seg.hi && w > 0.0, "{seg:?} t={}", k as f64 * 0.1);
                }
            }
        }
    }

    #[test]
    fn weight_is_speed_of_node() {
        let segs = [
            Segment::new(-1.0, 3.0),
            Segment::new(1.0, f64::INFINITY).with_scale(2.0),
            Segment::new(f64::NEG_INFINITY, 0.0),
            Segment::new(f64::NEG_INFINITY, f64::INFINITY),
        ];
        for seg in &segs {
            for t in [-1.3, -0.2, 0.4, 1.1] {
                let h = 1e-6;
                let (u1, _) = node(seg, t - h).unwrap();
                let (u2, _) = node(seg, t + h).unwrap();
                let (_, w) = node(seg, t).unwrap();
                let fd = ((u2 - u1) / (2.0 * h)).abs();
                assert!((fd - w).abs() < 1e-6 * w.abs().max(1.0), "{seg:?} t={t}: {fd} vs {w}");
            }
        }
    }
}
