use std::collections::BTreeMap;

use curved_qgt::models::level_set;
use curved_qgt::spectrum::solve_levels;
use serde_json::json;

use crate::config::{self, Settings};
use crate::output::{self, num, Row, Table};
use crate::CliError;

pub fn levels(settings: &Settings, params: &BTreeMap<String, f64>, k: usize, points: usize) -> Result<(), CliError> {
    let model = settings.model()?;
    let p = model.point(&config::ordered(&model, params)?)?;
    let found = if k == 0 { Vec::new() } else { solve_levels(&model, &p, k, points)? };
    let rows = found
        .iter()
        .enumerate()
        .map(|(n, l)| Row {
            cells: vec![n.to_string(), num(l.energy), num(l.residual), l.sector.to_string()],
            json: json!({ "n": n, "energy": l.energy, "residual": l.residual, "sector": l.sector }),
        })
        .collect();
    output::write(
        settings,
        &Table {
            header: ["n", "energy", "residual", "sector"].map(String::from).to_vec(),
            rows,
        },
    )
}

pub fn portrait(settings: &Settings, omega: f64, lambda: f64, energies: &[f64], samples: usize) -> Result<(), CliError> {
    if lambda == 0.0 {
        return Err(CliError::usage("phase-portrait needs lambda != 0"));
    }
    if !(omega.is_finite() && omega > 0.0) {
        return Err(CliError::usage("phase-portrait needs omega > 0"));
    }
    if samples < 2 {
        return Err(CliError::usage("phase-portrait needs at least 2 samples"));
    }
    let mut rows = Vec::new();
    for &e in energies {
        let set = level_set(omega, lambda, e, samples);
        let note = set.note.clone().unwrap_or_default();
        if set.points.is_empty() {
            rows.push(Row {
                cells: vec![num(e), String::new(), String::new(), note],
                json: json!({ "energy": e, "points": [], "note": set.note }),
            });
            continue;
        }
        for &(x, p) in &set.points {
            rows.push(Row {
                cells: vec![num(e), num(x), num(p), note.clone()],
                json: json!({ "energy": e, "x": x, "p": p }),
            });
        }
    }
    output::write(
        settings,
        &Table {
            header: ["energy", "x", "p", "note"].map(String::from).to_vec(),
            rows,
        },
    )
}
