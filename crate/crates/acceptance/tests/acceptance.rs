//! One PASS/FAIL line per acceptance criterion. Every sub-check of a criterion is
//! evaluated and reported, even after the first failure.

use std::sync::Arc;
use std::time::Instant;

use curved_qgt::diffops::{sigma, sigma_via_inverse, FdConfig};
use curved_qgt::fidelity::{fidelity_susceptibility, SusceptibilityConfig};
use curved_qgt::geometry::{
    self, berry_phase_loop, gauge_transform_with_grad, gauss_legendre, hermitian_eigenvalues, reparameterize,
    GeometryConfig, Reparameterization,
};
use curved_qgt::models::{self, ModelSpec};
use curved_qgt::spectrum::solve_levels;
use curved_qgt::{ParameterDomain, ParameterPoint, ParameterRange};
use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const PAPER_MODELS: [&str; 4] = ["anharmonic-1d", "morse-like", "coupled-anharmonic-2d", "generalized-anharmonic"];

/// `G_λλ` of the Morse-like ground state at `(λ, ω, ħ) = (1, 1, 1)`, from the printed
/// closed form evaluated with mpmath at 30 digits.
const MORSE_G_LL: f64 = 0.367_016_714_843_204_5;

#[derive(Default)]
struct Report {
    checks: Vec<(bool, String)>,
}

impl Report {
    fn check(&mut self, ok: bool, what: impl Into<String>) {
        self.checks.push((ok, what.into()));
    }

    fn fail(&mut self, what: impl Into<String>) {
        self.check(false, what);
    }

    fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.0)
    }

    fn summary(&self) -> String {
        let bad: Vec<&str> = self.checks.iter().filter(|c| !c.0).map(|c| c.1.as_str()).collect();
        if bad.is_empty() {
            let all: Vec<&str> = self.checks.iter().map(|c| c.1.as_str()).collect();
            all.join("; ")
        } else {
            bad.join("; ")
        }
    }
}

fn model(name: &str) -> ModelSpec {
    models::get(name, 1.0).unwrap()
}

fn rel_err(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    (a - b).amax() / b.amax()
}

fn criterion_1() -> Report {
    let mut r = Report::default();
    let m = model("anharmonic-1d");
    let cfg = GeometryConfig::default();
    let (mut worst, mut worst_det) = (0.0f64, 0.0f64);
    for n in 0..3u32 {
        for (l, w) in [(1.0, 1.0), (2.0, 0.5), (0.5, 3.0)] {
            let g = match geometry::qmt(&m.system, &m.point(&[l, w]).unwrap(), n.into(), &cfg) {
                Ok(g) => g,
                Err(e) => {
                    r.fail(format!("n={n} ({l},{w}): {e}"));
                    continue;
                }
            };
            let k = f64::from(n * n + n + 1);
            let expect = DMatrix::from_row_slice(
                2,
                2,
                &[1.0 / (8.0 * l * l), 1.0 / (8.0 * l * w), 1.0 / (8.0 * l * w), 1.0 / (8.0 * w * w)],
            ) * k;
            worst = worst.max(rel_err(&g, &expect));
            worst_det = worst_det.max(g.determinant().abs());
        }
    }
    r.check(worst <= 1e-6, format!("max rel err {worst:.2e} (<= 1e-6)"));
    r.check(worst_det <= 1e-10, format!("max |det G| {worst_det:.2e} (<= 1e-10)"));
    r
}

fn criterion_2() -> Report {
    let mut r = Report::default();
    let m = model("morse-like");
    let cfg = GeometryConfig::default();
    let g_at = |l: f64, w: f64| geometry::qmt(&m.system, &m.point(&[l, w]).unwrap(), 0.into(), &cfg).unwrap();

    let worst = [0.5, 1.0, 2.0]
        .iter()
        .map(|&w| {
            let e = 1.0 / (8.0 * w * w);
            (g_at(1.0, w)[(1, 1)] - e).abs() / e
        })
        .fold(0.0, f64::max);
    r.check(worst <= 1e-6, format!("G_ww rel err {worst:.2e} (<= 1e-6)"));

    let gll = g_at(1.0, 1.0)[(0, 0)];
    let e = (gll - MORSE_G_LL).abs() / MORSE_G_LL;
    r.check(e <= 1e-4, format!("G_ll {gll:.10} rel err {e:.2e} (<= 1e-4)"));

    // Sweep ω ∈ [0.9, 1.2] at λ = 0.05, then bisect the single bracket.
    let lam = 0.05;
    let f = |w: f64| g_at(lam, w)[(0, 1)];
    let grid: Vec<f64> = (0..50).map(|i| 0.9 + 0.3 * i as f64 / 49.0).collect();
    let vals: Vec<f64> = grid.iter().map(|&w| f(w)).collect();
    let brackets: Vec<usize> = (0..49).filter(|&i| vals[i].signum() != vals[i + 1].signum()).collect();
    if brackets.len() == 1 {
        let (mut a, mut b) = (grid[brackets[0]], grid[brackets[0] + 1]);
        let fa = f(a);
        for _ in 0..50 {
            let c = 0.5 * (a + b);
            if f(c).signum() == fa.signum() {
                a = c;
            } else {
                b = c;
            }
        }
        let w0 = 0.5 * (a + b);
        r.check((w0 - 1.037).abs() <= 1e-3, format!("omega_0 = {w0:.6} (1.037 +- 0.001)"));
    } else {
        r.fail(format!("expected one sign change of G_lw, found {}", brackets.len()));
    }

    let mut worst = 0.0f64;
    for (l, w) in [(1.0, 1.0), (0.5, 1.5), (-0.8, 0.7)] {
        let p = m.point(&[l, w]).unwrap();
        match fidelity_susceptibility(&m.system, &p, 0.into(), &SusceptibilityConfig::default()) {
            Ok(s) => worst = worst.max((s.chi[(0, 1)] - g_at(l, w)[(0, 1)]).abs()),
            Err(e) => r.fail(format!("fidelity at ({l},{w}): {e}")),
        }
    }
    r.check(worst <= 1e-4, format!("G_lw dual-route gap {worst:.2e} (<= 1e-4)"));
    r
}

fn criterion_3() -> Report {
    let mut r = Report::default();
    let m = model("generalized-anharmonic");
    let cfg = GeometryConfig::default();
    let (mut eg, mut ef, mut smin) = (0.0f64, 0.0f64, 0.0f64);
    for n in 0..2u32 {
        for [l, b, c] in [[1.0, 0.0, 1.0], [1.0, 0.5, 1.0], [2.0, 0.3, 1.0]] {
            let t = match geometry::qgt(&m.system, &m.point(&[l, b, c]).unwrap(), n.into(), &cfg) {
                Ok(t) => t,
                Err(e) => {
                    r.fail(format!("n={n} ({l},{b},{c}): {e}"));
                    continue;
                }
            };
            let w2 = c - b * b;
            let w = w2.sqrt();
            let k = f64::from(n * n + n + 1);
            let g = DMatrix::from_row_slice(
                3,
                3,
                &[
                    c / (8.0 * w2 * l * l),
                    0.0,
                    1.0 / (16.0 * w2 * l),
                    0.0,
                    c / (8.0 * w2 * w2),
                    -b / (16.0 * w2 * w2),
                    1.0 / (16.0 * w2 * l),
                    -b / (16.0 * w2 * w2),
                    1.0 / (32.0 * w2 * w2),
                ],
            ) * k;
            let f = DMatrix::from_row_slice(3, 3, &[0.0, 2.0 * c, -b, -2.0 * c, 0.0, -l, b, l, 0.0])
                * (f64::from(2 * n + 1) / (16.0 * w * w2 * l));
            eg = eg.max(rel_err(&t.qmt, &g));
            ef = ef.max(rel_err(&t.berry_curvature, &f));
            smin = smin.max(t.qmt.clone().singular_values().min());
        }
    }
    r.check(eg <= 1e-6, format!("QMT rel err {eg:.2e} (<= 1e-6)"));
    r.check(ef <= 1e-6, format!("F rel err {ef:.2e} (<= 1e-6)"));
    r.check(smin <= 1e-8, format!("largest smallest singular value {smin:.2e} (<= 1e-8)"));
    r
}

fn criterion_4() -> Report {
    let mut r = Report::default();
    let m = model("coupled-anharmonic-2d");
    let cfg = GeometryConfig::default();
    let qmt = |v: [f64; 4]| geometry::qmt(&m.system, &m.point(&v).unwrap(), 0.into(), &cfg);

    let mut norm_err = 0.0f64;
    for p in m.random_points(5, 41) {
        let psi = &m.system.psi;
        let ip = geometry::inner_product(
            |x| psi.eval(x, &p, 0.into()),
            |x| psi.eval(x, &p, 0.into()),
            &m.system.metric,
            &m.system.domain(&p),
            &p,
            &Default::default(),
        )
        .unwrap();
        norm_err = norm_err.max((ip.value.re - 1.0).abs());
    }
    r.check(norm_err <= 1e-6, format!("norm err {norm_err:.2e} (<= 1e-6)"));

    let (k1, k2, a, b) = (1.2, 0.4, 0.7, 1.5);
    let g1 = qmt([k1, k2, a, b]).unwrap();
    let g2 = qmt([k1, k2, b, a]).unwrap();
    let perm = [0, 1, 3, 2];
    let swapped = DMatrix::from_fn(4, 4, |i, j| g1[(perm[i], perm[j])]);
    let ex = (&swapped - &g2).amax();
    r.check(ex <= 1e-5, format!("a<->b exchange gap {ex:.2e} (<= 1e-5)"));

    let (mut det, mut sub) = (0.0f64, f64::INFINITY);
    for p in m.random_points(5, 7) {
        let g = geometry::qmt(&m.system, &p, 0.into(), &cfg).unwrap();
        det = det.max(g.determinant().abs());
        sub = sub.min(g.view((0, 0), (3, 3)).determinant());
    }
    r.check(det <= 1e-8, format!("max |det G| {det:.2e} (<= 1e-8)"));
    r.check(sub > 0.0, format!("min fixed-b subdeterminant {sub:.3e} (> 0)"));

    let k1 = 1.5;
    let mut gab = Vec::new();
    let mut scaled = Vec::new();
    for k2 in [1e-2, 1e-3, 1e-4] {
        let g = qmt([k1, k2, 0.8, 1.3]).unwrap();
        gab.push(g[(2, 3)].abs());
        scaled.push(k1 * k1 * g[(0, 0)]);
    }
    let shrinking = gab.windows(2).all(|w| w[1] < w[0]) && gab[2] < 1e-3;
    r.check(shrinking, format!("|G_ab| over k2 = {gab:?} (decreasing to < 1e-3)"));
    let lo = scaled.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = scaled.iter().cloned().fold(0.0, f64::max);
    let spread = (hi - lo) / lo;
    r.check(spread <= 0.02, format!("k1^2 G_k1k1 spread {:.2}% (<= 2%)", 100.0 * spread));
    r
}

fn criterion_5() -> Report {
    let mut r = Report::default();
    let cfg = GeometryConfig::default();
    for name in PAPER_MODELS {
        let m = model(name);
        let mut worst = 0.0f64;
        for p in m.random_points(5, 2024) {
            let chi = fidelity_susceptibility(&m.system, &p, 0.into(), &SusceptibilityConfig::default());
            let g = geometry::qmt(&m.system, &p, 0.into(), &cfg);
            match (chi, g) {
                (Ok(s), Ok(g)) => worst = worst.max((&s.chi - &g).amax()),
                (Err(e), _) | (_, Err(e)) => r.fail(format!("{name} at {:?}: {e}", p.values())),
            }
        }
        r.check(worst <= 1e-4, format!("{name} {worst:.1e}"));
    }
    r
}

fn criterion_6() -> Report {
    let mut r = Report::default();
    let mut slowest = 0.0f64;
    let mut run = |name: &str, v: &[f64], levels: usize, spacing: f64, r: &mut Report| {
        let m = model(name);
        let p = m.point(v).unwrap();
        let t = Instant::now();
        let out = solve_levels(&m, &p, levels, 2000);
        slowest = slowest.max(t.elapsed().as_secs_f64());
        match out {
            Ok(ls) => {
                let worst = ls
                    .iter()
                    .enumerate()
                    .map(|(n, l)| {
                        let e = (n as f64 + 0.5) * spacing;
                        (l.energy - e).abs() / e
                    })
                    .fold(0.0, f64::max);
                r.check(worst <= 1e-4, format!("{name} {v:?} rel err {worst:.1e}"));
            }
            Err(e) => r.fail(format!("{name} {v:?}: {e}")),
        }
    };
    run("anharmonic-1d", &[1.0, 1.0], 4, 1.0, &mut r);
    run("anharmonic-1d", &[2.0, 0.5], 4, 0.5, &mut r);
    run("morse-like", &[1.0, 1.0], 1, 1.0, &mut r);
    run("morse-like", &[-0.5, 1.7], 1, 1.7, &mut r);
    run("generalized-anharmonic", &[1.0, 0.5, 1.0], 4, 0.75f64.sqrt(), &mut r);
    run("generalized-anharmonic", &[2.0, 0.3, 1.5], 4, 1.41f64.sqrt(), &mut r);
    r.check(slowest < 10.0, format!("slowest solve {slowest:.2}s (< 10 s)"));
    r
}

fn criterion_7() -> Report {
    let mut r = Report::default();
    let cfg = GeometryConfig::default();

    // Gauge: 20 random smooth phases on the complex family.
    let m = model("generalized-anharmonic");
    let p = m.point(&[1.2, 0.3, 1.1]).unwrap();
    let base = geometry::qgt(&m.system, &p, 1.into(), &cfg).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(20);
    let (mut gauge, mut shift) = (0.0f64, 0.0f64);
    for _ in 0..20 {
        let c: [f64; 4] = std::array::from_fn(|_| rng.gen_range(-2.0..2.0));
        let alpha = Arc::new(move |l: &ParameterPoint| {
            c[0] * l.get(0) * l.get(1) + c[1] * (c[2] * l.get(2)).sin() + c[3] * l.get(1).powi(3)
        });
        let grad = Arc::new(move |l: &ParameterPoint, k: usize| match k {
            0 => c[0] * l.get(1),
            1 => c[0] * l.get(0) + 3.0 * c[3] * l.get(1).powi(2),
            _ => c[1] * c[2] * (c[2] * l.get(2)).cos(),
        });
        let sys = m.system.with_psi(gauge_transform_with_grad(&m.system.psi, alpha, grad.clone()));
        let t = geometry::qgt(&sys, &p, 1.into(), &cfg).unwrap();
        gauge = gauge
            .max((&t.qmt - &base.qmt).amax())
            .max((&t.berry_curvature - &base.berry_curvature).amax())
            .max(t.qgt.iter().zip(base.qgt.iter()).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max));
        for k in 0..3 {
            shift = shift.max((t.berry_connection[k] - base.berry_connection[k] - grad(&p, k)).abs());
        }
    }
    r.check(gauge <= 1e-7, format!("gauge {gauge:.1e}"));
    r.check(shift <= 1e-8, format!("beta shift {shift:.1e}"));

    let (mut norm_id, mut psd, mut sig) = (0.0f64, f64::INFINITY, 0.0f64);
    let fd = FdConfig::default();
    for name in models::MODEL_NAMES {
        let m = model(name);
        for p in m.random_points(3, 99) {
            let res = geometry::normalization_identity(&m.system, &p, 0.into(), &cfg).unwrap();
            norm_id = res.iter().fold(norm_id, |a, v| a.max(v.abs()));
            let t = geometry::qgt(&m.system, &p, 0.into(), &cfg).unwrap();
            psd = hermitian_eigenvalues(&t.qgt).into_iter().fold(psd, f64::min);
            let x: Vec<f64> = vec![0.63; m.system.psi.dim()];
            for k in 0..p.dim() {
                let a = sigma(&m.system.metric, &x, &p, k, &m.system.parameters, &fd).unwrap();
                let b = sigma_via_inverse(&m.system.metric, &x, &p, k, &m.system.parameters, &fd).unwrap();
                sig = sig.max((a - b).abs() / a.abs().max(1.0));
            }
        }
    }
    r.check(norm_id <= 1e-7, format!("normalization identity {norm_id:.1e}"));
    r.check(psd >= -1e-9, format!("min QGT eigenvalue {psd:.1e}"));
    r.check(sig <= 1e-8, format!("sigma routes {sig:.1e}"));

    // λ' = (λ, μ) with μ = ω³.
    let m = model("anharmonic-1d");
    let params = ParameterDomain::new(&["lambda", "mu"], vec![ParameterRange::positive(), ParameterRange::positive()]);
    let map = Reparameterization::new(
        params,
        |v| vec![v[0], v[1].cbrt()],
        |v| DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, v[1].cbrt() / (3.0 * v[1])]),
    );
    let pulled = reparameterize(&m.system, &map, &[vec![1.0, 1.0]]).unwrap();
    let mut cov = 0.0f64;
    for (l, w) in [(1.0, 2.0), (0.7, 1.3), (1.5, 0.8)] {
        let new = pulled.point(vec![l, w * w * w]).unwrap();
        let g_new = geometry::qmt(&pulled, &new, 0.into(), &cfg).unwrap();
        let g_old = geometry::qmt(&m.system, &m.point(&[l, w]).unwrap(), 0.into(), &cfg).unwrap();
        let j = map.jacobian(new.values());
        cov = cov.max(rel_err(&g_new, &(j.transpose() * g_old * &j)));
    }
    r.check(cov <= 1e-6, format!("covariance {cov:.1e}"));

    // Loop in the (b, c) plane against the surface integral of F_bc.
    let m = model("generalized-anharmonic");
    let (l, b0, b1, c0, c1) = (1.0, 0.0, 0.4, 1.0, 1.5);
    let lp = vec![vec![l, b0, c0], vec![l, b1, c0], vec![l, b1, c1], vec![l, b0, c1]];
    let phase = berry_phase_loop(&m.system, &lp, 0.into(), &cfg).unwrap();
    let (x, w) = gauss_legendre(10);
    let mut flux = 0.0;
    for (xb, wb) in x.iter().zip(&w) {
        for (xc, wc) in x.iter().zip(&w) {
            let b = b0 + 0.5 * (b1 - b0) * (1.0 + xb);
            let c = c0 + 0.5 * (c1 - c0) * (1.0 + xc);
            let f = geometry::berry_curvature(&m.system, &m.point(&[l, b, c]).unwrap(), 0.into(), &cfg).unwrap();
            flux += 0.25 * (b1 - b0) * (c1 - c0) * wb * wc * f[(1, 2)];
        }
    }
    let gap = (phase - flux).abs();
    r.check(gap <= 1e-4, format!("loop {phase:.6} vs surface {flux:.6}, gap {gap:.1e} (<= 1e-4)"));
    r
}

fn main() {
    type Criterion = (&'static str, fn() -> Report);
    let criteria: [Criterion; 7] = [
        ("anharmonic QMT", criterion_1),
        ("Morse-like QMT", criterion_2),
        ("generalized QMT and curvature", criterion_3),
        ("coupled 2-D properties", criterion_4),
        ("fidelity route equivalence", criterion_5),
        ("spectra", criterion_6),
        ("property suite", criterion_7),
    ];
    let mut failed = Vec::new();
    for (i, (name, run)) in criteria.iter().enumerate() {
        let t = Instant::now();
        let rep = run();
        let tag = if rep.passed() { "PASS" } else { "FAIL" };
        println!("{tag} {} {name} [{:.1}s]: {}", i + 1, t.elapsed().as_secs_f64(), rep.summary());
        if !rep.passed() {
            failed.push(i + 1);
        }
    }
    if !failed.is_empty() {
        eprintln!("failing criteria: {failed:?}");
        std::process::exit(1);
    }
}
