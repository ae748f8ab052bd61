//! Globally adaptive 7/15-point Gauss–Kronrod integration of vector integrands.

#![allow(clippy::excessive_precision)]

use super::{SegmentIntegrand, Tol, VecIntegral};
use crate::domain::Segment;
use crate::error::{Error, Result};
use crate::Complex;

const XGK: [f64; 8] = [
    0.991_455_371_120_812_639_206_854_697_526_329,
    0.949_107_912_342_758_524_526_189_684_047_851,
    0.864_864_423_359_769_072_789_712_788_640_926,
    0.741_531_185_599_394_439_863_864_773_280_788,
    0.586_087_235_467_691_130_294_144_845_693_013,
    0.405_845_151_377_397_166_906_606_412_076_961,
    0.207_784_955_007_898_467_600_689_403_773_245,
    0.0,
];

const WGK: [f64; 8] = [
    0.022_935_322_010_529_224_963_732_008_058_970,
    0.063_092_092_629_978_553_290_700_663_189_204,
    0.104_790_010_322_250_183_839_876_322_541_518,
    0.140_653_259_715_525_918_745_189_590_510_238,
    0.169_004_726_639_267_902_826_583_426_598_550,
    0.190_350_578_064_785_409_913_256_402_421_014,
    0.204_432_940_075_298_892_414_161_999_234_649,
    0.209_482_141_084_727_828_012_999_174_891_714,
];

const WG: [f64; 4] = [
    0.129_484_966_168_869_693_270_611_432_679_082,
    0.279_705_391_489_276_667_901_467_771_423_780,
    0.381_830_050_505_118_944_950_369_775_488_975,
    0.417_959_183_673_469_387_755_102_040_816_327,
];

/// Maps the integration variable `t` of the rule onto the segment. Unbounded
/// segments are compactified with `u = lo + s t/(1-t)` (and mirrors).
#[derive(Clone, Copy)]
enum Chart {
    Direct,
    Upper { lo: f64, s: f64 },
    Lower { hi: f64, s: f64 },
}

impl Chart {
    fn apply(self, t: f64) -> (f64, f64) {
        match self {
            Chart::Direct => (t, 1.0),
            Chart::Upper { lo, s } => {
                let r = 1.0 / (1.0 - t);
                (lo + s * t * r, s * r * r)
            }
            Chart::Lower { hi, s } => {
                let r = 1.0 / (1.0 - t);
                (hi - s * t * r, s * r * r)
            }
        }
    }
}

struct Piece {
    chart: Chart,
    a: f64,
    b: f64,
    value: Vec<Complex>,
    error: Vec<f64>,
    frozen: bool,
}

struct Rule<'a, 'f> {
    seg: &'a Segment,
    f: &'a mut SegmentIntegrand<'f>,
    buf: Vec<Complex>,
    evaluations: usize,
}

impl Rule<'_, '_> {
    fn eval(&mut self, chart: Chart, t: f64, acc_k: &mut [Complex], wk: f64, acc_g: Option<(&mut [Complex], f64)>) -> Result<()> {
        let (u, du) = chart.apply(t);
        let x = self.seg.to_x(u);
        let factor = du * self.seg.jacobian(u);
        (self.f)(x, &mut self.buf)?;
        self.evaluations += 1;
        if self.buf.iter().any(|v| !(v.re.is_finite() && v.im.is_finite())) {
            return Err(Error::NonFiniteIntegrand { x: vec![x] });
        }
        for (k, v) in acc_k.iter_mut().zip(&self.buf) {
            *k += v * (wk * factor);
        }
        if let Some((g, wg)) = acc_g {
            for (k, v) in g.iter_mut().zip(&self.buf) {
                *k += v * (wg * factor);
            }
        }
        Ok(())
    }

    fn piece(&mut self, chart: Chart, a: f64, b: f64) -> Result<Piece> {
        let n = self.buf.len();
        let c = 0.5 * (a + b);
        let hl = 0.5 * (b - a);
        let mut k = vec![Complex::new(0.0, 0.0); n];
        let mut g = vec![Complex::new(0.0, 0.0); n];
        self.eval(chart, c, &mut k, WGK[7], Some((&mut g, WG[3])))?;
        for j in 0..7 {
            for t in [c - hl * XGK[j], c + hl * XGK[j]] {
                if j % 2 == 1 {
                    self.eval(chart, t, &mut k, WGK[j], Some((&mut g, WG[j / 2])))?;
                } else {
                    self.eval(chart, t, &mut k, WGK[j], None)?;
                }
            }
        }
        let value: Vec<Complex> = k.iter().map(|v| v * hl).collect();
        let error = k.iter().zip(&g).map(|(k, g)| ((k - g) * hl).norm()).collect();
        Ok(Piece {
            chart,
            a,
            b,
            value,
            error,
            frozen: false,
        })
    }
}

pub(super) fn integrate(
    f: &mut SegmentIntegrand<'_>,
    seg: &Segment,
    ncomp: usize,
    ncheck: usize,
    tol: Tol,
    max_subdivisions: usize,
) -> Result<VecIntegral> {
    let mut rule = Rule {
        seg,
        f,
        buf: vec![Complex::new(0.0, 0.0); ncomp],
        evaluations: 0,
    };

    let mut pieces = Vec::new();
    match (seg.lo.is_finite(), seg.hi.is_finite()) {
        (true, true) => {
            let mut cuts = vec![seg.lo];
            cuts.extend(seg.breakpoints.iter().copied().filter(|&b| b > seg.lo && b < seg.hi));
            cuts.push(seg.hi);
            cuts.sort_by(f64::total_cmp);
            cuts.dedup();
            for w in cuts.windows(2) {
                pieces.push(rule.piece(Chart::Direct, w[0], w[1])?);
            }
        }
        (true, false) => pieces.push(rule.piece(Chart::Upper { lo: seg.lo, s: seg.scale }, 0.0, 1.0)?),
        (false, true) => pieces.push(rule.piece(Chart::Lower { hi: seg.hi, s: seg.scale }, 0.0, 1.0)?),
        (false, false) => {
            pieces.push(rule.piece(Chart::Lower { hi: 0.0, s: seg.scale }, 0.0, 1.0)?);
            pieces.push(rule.piece(Chart::Upper { lo: 0.0, s: seg.scale }, 0.0, 1.0)?);
        }
    }

    let mut bisections = 0;
    loop {
        let mut total = vec![Complex::new(0.0, 0.0); ncomp];
        let mut total_err = vec![0.0; ncomp];
        let mut l1 = vec![0.0; ncomp];
        for p in &pieces {
            for i in 0..ncomp {
                total[i] += p.value[i];
                total_err[i] += p.error[i];
                l1[i] += p.value[i].norm();
            }
        }
        let bounds: Vec<f64> = (0..ncheck)
            .map(|i| tol.bound(total[i].norm()).max(50.0 * f64::EPSILON * l1[i]))
            .collect();
        let done = (0..ncheck).all(|i| total_err[i] <= bounds[i]);
        if done {
            return Ok(VecIntegral {
                value: total,
                error: total_err,
                evaluations: rule.evaluations,
            });
        }

        let worst = pieces
            .iter()
            .enumerate()
            .filter(|(_, p)| !p.frozen)
            .map(|(k, p)| {
                let score = (0..ncheck).fold(0.0f64, |m, i| m.max(p.error[i] / bounds[i]));
                (k, score)
            })
            .max_by(|a, b| a.1.total_cmp(&b.1));

        let fail = |total: &[Complex], total_err: &[f64], evaluations| {
            let i = (0..ncheck)
                .max_by(|&a, &b| (total_err[a] / bounds[a]).total_cmp(&(total_err[b] / bounds[b])))
                .unwrap_or(0);
            Err(Error::QuadratureNonConvergence {
                best: total[i],
                estimate: total_err[i],
                evaluations,
            })
        };

        let Some((k, _)) = worst else {
            return fail(&total, &total_err, rule.evaluations);
        };
        if bisections >= max_subdivisions {
            return fail(&total, &total_err, rule.evaluations);
        }
        let p = &pieces[k];
        let mid = 0.5 * (p.a + p.b);
        if !(mid > p.a && mid < p.b) || (p.b - p.a) <= 1e-14 * (p.a.abs() + p.b.abs()) {
            pieces[k].frozen = true;
            continue;
        }
        let (chart, a, b) = (p.chart, p.a, p.b);
        let left = rule.piece(chart, a, mid)?;
        let right = rule.piece(chart, mid, b)?;
        pieces[k] = left;
        pieces.push(right);
        bisections += 1;
    }
}
