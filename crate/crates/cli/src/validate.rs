use std::collections::BTreeMap;
use std::sync::Arc;

use curved_qgt::fidelity::{fidelity_susceptibility, SusceptibilityConfig};
use curved_qgt::geometry::{self, gauge_transform_with_grad};
use curved_qgt::models::ModelSpec;
use curved_qgt::{Error, ParameterPoint, QuantumSystem, WavefunctionFamily};
use serde_json::json;

use crate::config::{self, Settings};
use crate::output::{self, num, Row, Table};
use crate::CliError;

pub struct Options {
    pub point: Option<BTreeMap<String, f64>>,
    pub n: u32,
    pub samples: usize,
    pub seed: u64,
    pub misnormalize: Option<f64>,
}

const NORM_TOL: f64 = 1e-6;
const IDENTITY_TOL: f64 = 1e-7;
const ROUTE_TOL: f64 = 1e-4;
const GAUGE_TOL: f64 = 1e-7;
const SHIFT_TOL: f64 = 1e-8;

struct Check {
    name: &'static str,
    tolerance: f64,
    worst: f64,
    /// Points at which the check actually ran.
    evaluated: usize,
    failure: Option<String>,
}

impl Check {
    fn new(name: &'static str, tolerance: f64) -> Self {
        Self {
            name,
            tolerance,
            worst: 0.0,
            evaluated: 0,
            failure: None,
        }
    }

    fn record(&mut self, at: &ParameterPoint, value: Result<f64, Error>) {
        self.evaluated += 1;
        match value {
            Ok(v) => {
                if (v.is_nan() || v > self.tolerance) && self.failure.is_none() {
                    self.failure = Some(format!("deviation {v:e} at {:?}", at.values()));
                }
                if v.is_nan() || v > self.worst {
                    self.worst = v;
                }
            }
            Err(e) => {
                self.worst = f64::INFINITY;
                if self.failure.is_none() {
                    self.failure = Some(format!("{e} at {:?}", at.values()));
                }
            }
        }
    }

    fn passed(&self) -> bool {
        self.failure.is_none()
    }
}

fn scaled(sys: &QuantumSystem, factor: f64) -> QuantumSystem {
    let psi = sys.psi.clone();
    let fam = WavefunctionFamily::new(format!("{} x {factor}", psi.label()), psi.dim(), move |x, l, n| {
        psi.eval(x, l, n) * factor
    });
    sys.with_psi(fam)
}

fn norm_deviation(sys: &QuantumSystem, p: &ParameterPoint, n: u32, settings: &Settings) -> Result<f64, Error> {
    let psi = &sys.psi;
    let ip = geometry::inner_product(
        |x| psi.eval(x, p, n.into()),
        |x| psi.eval(x, p, n.into()),
        &sys.metric,
        &sys.domain(p),
        p,
        &settings.geometry.quad,
    )?;
    Ok((ip.value.re - 1.0).abs())
}

/// `α(λ) = Σ_k c_k sin(λ_k)` with fixed, unremarkable coefficients.
fn gauge_checks(sys: &QuantumSystem, p: &ParameterPoint, n: u32, settings: &Settings) -> Result<(f64, f64), Error> {
    let m = p.dim();
    let coef: Vec<f64> = (0..m).map(|k| 0.7 - 0.45 * k as f64).collect();
    let c1 = coef.clone();
    let alpha = Arc::new(move |l: &ParameterPoint| (0..l.dim()).map(|k| c1[k] * l.get(k).sin()).sum::<f64>());
    let c2 = coef.clone();
    let grad = Arc::new(move |l: &ParameterPoint, k: usize| c2[k] * l.get(k).cos());
    let moved = sys.with_psi(gauge_transform_with_grad(&sys.psi, alpha, grad.clone()));
    let a = geometry::qgt(sys, p, n.into(), &settings.geometry)?;
    let b = geometry::qgt(&moved, p, n.into(), &settings.geometry)?;
    let tensors = (&a.qmt - &b.qmt)
        .amax()
        .max((&a.berry_curvature - &b.berry_curvature).amax())
        .max(a.qgt.iter().zip(b.qgt.iter()).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max));
    let shift = (0..m)
        .map(|k| (b.berry_connection[k] - a.berry_connection[k] - grad(p, k)).abs())
        .fold(0.0, f64::max);
    Ok((tensors, shift))
}

fn points(model: &ModelSpec, opts: &Options) -> Result<Vec<ParameterPoint>, CliError> {
    match &opts.point {
        Some(given) => Ok(vec![model.point(&config::ordered(model, given)?)?]),
        None => Ok(model.random_points(opts.samples, opts.seed)),
    }
}

pub fn run(settings: &Settings, opts: &Options) -> Result<(), CliError> {
    let model = settings.model()?;
    model.supports(opts.n.into())?;
    let sys = match opts.misnormalize {
        Some(f) => scaled(&model.system, f),
        None => model.system.clone(),
    };
    let n = opts.n;
    let mut checks = [
        Check::new("normalization", NORM_TOL),
        Check::new("normalization_identity", IDENTITY_TOL),
        Check::new("route_equivalence", ROUTE_TOL),
        Check::new("gauge_invariance", GAUGE_TOL),
        Check::new("connection_shift", SHIFT_TOL),
    ];
    let fid = SusceptibilityConfig {
        quad: settings.geometry.quad,
        ..Default::default()
    };
    for p in points(&model, opts)? {
        let norm = norm_deviation(&sys, &p, n, settings);
        let normalized = matches!(norm, Ok(v) if v <= NORM_TOL);
        checks[0].record(&p, norm);
        if !normalized {
            // Everything downstream assumes a unit state.
            continue;
        }
        checks[1].record(
            &p,
            geometry::normalization_identity(&sys, &p, n.into(), &settings.geometry)
                .map(|r| r.iter().fold(0.0f64, |a, v| a.max(v.abs()))),
        );
        let route = fidelity_susceptibility(&sys, &p, n.into(), &fid).and_then(|s| {
            let g = geometry::qmt(&sys, &p, n.into(), &settings.geometry)?;
            Ok((&s.chi - &g).amax())
        });
        checks[2].record(&p, route);
        match gauge_checks(&sys, &p, n, settings) {
            Ok((t, s)) => {
                checks[3].record(&p, Ok(t));
                checks[4].record(&p, Ok(s));
            }
            Err(e) => {
                checks[3].record(&p, Err(e.clone()));
                checks[4].record(&p, Err(e));
            }
        }
    }

    let rows = checks
        .iter()
        .map(|c| Row {
            cells: vec![
                c.name.to_string(),
                num(c.worst),
                num(c.tolerance),
                c.passed().to_string(),
                c.evaluated.to_string(),
                c.failure.clone().unwrap_or_default(),
            ],
            json: json!({
                "check": c.name,
                "max_deviation": c.worst,
                "tolerance": c.tolerance,
                "passed": c.passed(),
                "evaluated": c.evaluated,
                "failure": c.failure,
            }),
        })
        .collect();
    output::write(
        settings,
        &Table {
            header: ["check", "max_deviation", "tolerance", "passed", "evaluated", "failure"].map(String::from).to_vec(),
            rows,
        },
    )?;
    let failed: Vec<&str> = checks.iter().filter(|c| !c.passed()).map(|c| c.name).collect();
    if failed.is_empty() {
        Ok(())
    } else {
        Err(CliError::validation(format!("failed checks: {}", failed.join(", "))))
    }
}
