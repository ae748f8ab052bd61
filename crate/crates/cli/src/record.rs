use std::collections::BTreeMap;

use curved_qgt::fidelity::{fidelity_susceptibility, Susceptibility, SusceptibilityConfig};
use curved_qgt::geometry;
use curved_qgt::models::ModelSpec;
use curved_qgt::{Error, GeometricTensors};
use nalgebra::DMatrix;
use rayon::prelude::*;
use serde_json::{json, Map, Value};

use crate::config::{self, Settings, SweepSpec};
use crate::output::{self, num, Row, Table};
use crate::CliError;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Output {
    Qmt,
    Qgt,
    BerryCurvature,
    BerryConnection,
    Det,
    /// Determinant with the named parameter's row and column removed.
    Subdet(usize),
    FidelityChi,
}

pub fn parse_outputs(model: &ModelSpec, list: &[String]) -> Result<Vec<Output>, CliError> {
    if list.is_empty() {
        return Ok(vec![Output::Qmt]);
    }
    let names = model.parameter_names();
    list.iter()
        .map(|s| {
            let s = s.trim();
            Ok(match s {
                "qmt" => Output::Qmt,
                "qgt" => Output::Qgt,
                "berry_curvature" => Output::BerryCurvature,
                "berry_connection" => Output::BerryConnection,
                "det" => Output::Det,
                "fidelity_chi" => Output::FidelityChi,
                _ => {
                    let p = s
                        .strip_prefix("subdet:")
                        .or_else(|| s.strip_prefix("subdet(").and_then(|r| r.strip_suffix(')')))
                        .ok_or_else(|| CliError::usage(format!("unknown output `{s}`")))?;
                    let i = names
                        .iter()
                        .position(|n| n == p)
                        .ok_or_else(|| CliError::usage(format!("{} has no parameter `{p}`", model.name)))?;
                    Output::Subdet(i)
                }
            })
        })
        .collect()
}

struct Computed {
    tensors: Option<GeometricTensors>,
    chi: Option<Susceptibility>,
}

fn needs_tensors(outputs: &[Output]) -> bool {
    outputs.iter().any(|o| *o != Output::FidelityChi)
}

fn evaluate(model: &ModelSpec, values: &[f64], n: u32, outputs: &[Output], settings: &Settings) -> Result<Computed, Error> {
    let p = model.point(values)?;
    model.supports(n.into())?;
    let tensors = if needs_tensors(outputs) {
        Some(geometry::qgt(&model.system, &p, n.into(), &settings.geometry)?)
    } else {
        None
    };
    let chi = if outputs.contains(&Output::FidelityChi) {
        let cfg = SusceptibilityConfig {
            quad: settings.geometry.quad,
            ..Default::default()
        };
        Some(fidelity_susceptibility(&model.system, &p, n.into(), &cfg)?)
    } else {
        None
    };
    Ok(Computed { tensors, chi })
}

fn minor(g: &DMatrix<f64>, skip: usize) -> DMatrix<f64> {
    g.clone().remove_row(skip).remove_column(skip)
}

fn rows_of(m: &DMatrix<f64>) -> Value {
    json!((0..m.nrows()).map(|i| m.row(i).iter().copied().collect::<Vec<f64>>()).collect::<Vec<_>>())
}

fn upper(prefix: &str, m: usize, strict: bool) -> Vec<String> {
    let mut out = Vec::new();
    for i in 0..m {
        for j in i + usize::from(strict)..m {
            out.push(format!("{prefix}_{}{}", i + 1, j + 1));
        }
    }
    out
}

fn upper_cells(g: &DMatrix<f64>, strict: bool) -> Vec<String> {
    let m = g.nrows();
    let mut out = Vec::new();
    for i in 0..m {
        for j in i + usize::from(strict)..m {
            out.push(num(g[(i, j)]));
        }
    }
    out
}

pub fn header(model: &ModelSpec, outputs: &[Output]) -> Vec<String> {
    let names = model.parameter_names();
    let m = names.len();
    let mut h: Vec<String> = names.to_vec();
    for o in outputs {
        match o {
            Output::Qmt => h.extend(upper("G", m, false)),
            Output::Qgt => {
                h.extend(upper("Qre", m, false));
                h.extend(upper("Qim", m, true));
            }
            Output::BerryCurvature => h.extend(upper("F", m, true)),
            Output::BerryConnection => h.extend((1..=m).map(|i| format!("beta_{i}"))),
            Output::Det => h.push("det".into()),
            Output::Subdet(i) => h.push(format!("subdet_{}", names[*i])),
            Output::FidelityChi => {
                h.extend(upper("chi", m, false));
                h.push("chi_fit_residual".into());
            }
        }
    }
    h.push("quad_err".into());
    h.push("error".into());
    h
}

fn row(model: &ModelSpec, values: &[f64], n: u32, outputs: &[Output], result: &Result<Computed, Error>) -> Row {
    let names = model.parameter_names();
    let m = names.len();
    let mut cells: Vec<String> = values.iter().map(|&v| num(v)).collect();
    let mut params = Map::new();
    for (k, &v) in names.iter().zip(values) {
        params.insert(k.clone(), json!(v));
    }
    let mut obj = Map::new();
    obj.insert("params".into(), Value::Object(params));
    obj.insert("n".into(), json!(n));
    let blank = |count: usize, cells: &mut Vec<String>| cells.extend(std::iter::repeat_n(String::new(), count));
    let width = |o: &Output| match o {
        Output::Qmt => m * (m + 1) / 2,
        Output::Qgt => m * m,
        Output::BerryCurvature => m * (m - 1) / 2,
        Output::BerryConnection => m,
        Output::Det | Output::Subdet(_) => 1,
        Output::FidelityChi => m * (m + 1) / 2 + 1,
    };
    match result {
        Ok(c) => {
            let mut subdet = Map::new();
            for o in outputs {
                match (o, &c.tensors, &c.chi) {
                    (Output::Qmt, Some(t), _) => {
                        cells.extend(upper_cells(&t.qmt, false));
                        obj.insert("qmt".into(), rows_of(&t.qmt));
                    }
                    (Output::Qgt, Some(t), _) => {
                        let re = t.qgt.map(|z| z.re);
                        let im = t.qgt.map(|z| z.im);
                        cells.extend(upper_cells(&re, false));
                        cells.extend(upper_cells(&im, true));
                        obj.insert("qgt".into(), json!({ "re": rows_of(&re), "im": rows_of(&im) }));
                    }
                    (Output::BerryCurvature, Some(t), _) => {
                        cells.extend(upper_cells(&t.berry_curvature, true));
                        obj.insert("berry_curvature".into(), rows_of(&t.berry_curvature));
                    }
                    (Output::BerryConnection, Some(t), _) => {
                        cells.extend(t.berry_connection.iter().map(|&v| num(v)));
                        obj.insert("berry_connection".into(), json!(t.berry_connection.iter().collect::<Vec<_>>()));
                    }
                    (Output::Det, Some(t), _) => {
                        let d = t.qmt.determinant();
                        cells.push(num(d));
                        obj.insert("det".into(), json!(d));
                    }
                    (Output::Subdet(i), Some(t), _) => {
                        let d = minor(&t.qmt, *i).determinant();
                        cells.push(num(d));
                        subdet.insert(names[*i].clone(), json!(d));
                    }
                    (Output::FidelityChi, _, Some(s)) => {
                        cells.extend(upper_cells(&s.chi, false));
                        cells.push(num(s.fit_residual));
                        obj.insert("fidelity_chi".into(), rows_of(&s.chi));
                    }
                    (o, _, _) => blank(width(o), &mut cells),
                }
            }
            if !subdet.is_empty() {
                obj.insert("subdet".into(), Value::Object(subdet));
            }
            let mut diag = Map::new();
            let quad_err = c.tensors.as_ref().map(|t| t.quad_error);
            if let Some(t) = &c.tensors {
                diag.insert("quad_err".into(), json!(t.quad_error));
                diag.insert("fd_steps".into(), json!(t.fd_steps));
            }
            if let Some(s) = &c.chi {
                diag.insert("fit_residual".into(), json!(s.fit_residual));
                diag.insert("linear_term".into(), json!(s.linear_term));
            }
            obj.insert("diag".into(), Value::Object(diag));
            obj.insert("error".into(), Value::Null);
            cells.push(quad_err.map(num).unwrap_or_default());
            cells.push(String::new());
        }
        Err(e) => {
            for o in outputs {
                blank(width(o), &mut cells);
            }
            cells.push(String::new());
            cells.push(e.to_string());
            obj.insert("diag".into(), json!({}));
            obj.insert("error".into(), json!(e.to_string()));
        }
    }
    Row {
        cells,
        json: Value::Object(obj),
    }
}

pub fn compute(settings: &Settings, params: &BTreeMap<String, f64>, n: u32, out: &[String]) -> Result<(), CliError> {
    let model = settings.model()?;
    let values = config::ordered(&model, params)?;
    let outputs = parse_outputs(&model, out)?;
    let result = evaluate(&model, &values, n, &outputs, settings);
    if let Err(e) = &result {
        return Err(CliError::from(e.clone()));
    }
    let mut r = row(&model, &values, n, &outputs, &result);
    if let Value::Object(obj) = &mut r.json {
        obj.insert(
            "config".into(),
            json!({
                "model": model.name,
                "hbar": settings.hbar,
                "quad_rel_tol": settings.geometry.quad.rel_tol,
                "fd_step": settings.geometry.fd.base_step,
            }),
        );
    }
    output::write(
        settings,
        &Table {
            header: header(&model, &outputs),
            rows: vec![r],
        },
    )
}

pub fn sweep(settings: &Settings, spec: &SweepSpec) -> Result<(), CliError> {
    let outputs = parse_outputs(&spec.model, &spec.outputs)?;
    let points = spec.points();
    // Collecting an indexed parallel iterator keeps grid order.
    let rows: Vec<(Row, bool)> = points
        .par_iter()
        .map(|v| {
            let r = evaluate(&spec.model, v, spec.n, &outputs, settings);
            (row(&spec.model, v, spec.n, &outputs, &r), r.is_err())
        })
        .collect();
    let failed = rows.iter().filter(|r| r.1).count();
    eprintln!("# sweep {}: {} points, {} failed", spec.model.name, rows.len(), failed);
    output::write(
        settings,
        &Table {
            header: header(&spec.model, &outputs),
            rows: rows.into_iter().map(|r| r.0).collect(),
        },
    )
}
