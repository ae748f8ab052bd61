use std::collections::BTreeMap;
use std::path::Path;

use curved_qgt::geometry::GeometryConfig;
use curved_qgt::models::{self, ModelSpec};
use serde::Deserialize;

use crate::{CliError, Format, GlobalArgs};

/// Mirror of the command-line flags; any subset may be present.
#[derive(Deserialize, Debug, Clone, Default)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub model: Option<String>,
    pub hbar: Option<f64>,
    pub format: Option<Format>,
    pub output: Option<String>,
    pub jobs: Option<usize>,
    pub quad_rel_tol: Option<f64>,
    pub fd_step: Option<f64>,
    pub n: Option<u32>,
    pub params: Option<BTreeMap<String, f64>>,
    pub out: Option<Vec<String>>,
    pub grid: Option<Vec<Axis>>,
    pub fixed: Option<BTreeMap<String, f64>>,
    pub samples: Option<usize>,
    pub seed: Option<u64>,
    pub k: Option<usize>,
    pub points: Option<usize>,
    pub energies: Option<Vec<f64>>,
    pub levels: Option<usize>,
}

impl FileConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::usage(format!("cannot read config {}: {e}", path.display())))?;
        serde_json::from_str(&text).map_err(|e| CliError::usage(format!("bad config {}: {e}", path.display())))
    }
}

#[derive(Deserialize, Debug, Clone, Copy, PartialEq, Eq, Default)]
#[serde(rename_all = "lowercase")]
pub enum Scale {
    #[default]
    Linear,
    Log,
}

#[derive(Deserialize, Debug, Clone, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct Axis {
    pub param: String,
    pub min: f64,
    pub max: f64,
    pub count: usize,
    #[serde(default)]
    pub scale: Scale,
}

impl Axis {
    /// `name=min:max:count[:log|:linear]`
    pub fn parse(s: &str) -> Result<Self, CliError> {
        let bad = || CliError::usage(format!("bad --grid `{s}`; expected name=min:max:count[:log]"));
        let (name, rest) = s.split_once('=').ok_or_else(bad)?;
        let parts: Vec<&str> = rest.split(':').collect();
        if !(3..=4).contains(&parts.len()) {
            return Err(bad());
        }
        let scale = match parts.get(3) {
            None | Some(&"linear") => Scale::Linear,
            Some(&"log") => Scale::Log,
            Some(_) => return Err(bad()),
        };
        Ok(Self {
            param: name.trim().to_string(),
            min: parts[0].parse().map_err(|_| bad())?,
            max: parts[1].parse().map_err(|_| bad())?,
            count: parts[2].parse().map_err(|_| bad())?,
            scale,
        })
    }

    pub fn values(&self) -> Vec<f64> {
        if self.count == 1 {
            return vec![self.min];
        }
        let last = (self.count - 1) as f64;
        (0..self.count)
            .map(|i| {
                let t = i as f64 / last;
                match self.scale {
                    Scale::Linear => self.min + t * (self.max - self.min),
                    Scale::Log => (self.min.ln() + t * (self.max.ln() - self.min.ln())).exp(),
                }
            })
            .collect()
    }
}

/// Everything a command needs besides its own arguments.
pub struct Settings {
    pub model: Option<String>,
    pub hbar: f64,
    pub format: Format,
    pub output: Option<String>,
    pub jobs: usize,
    pub geometry: GeometryConfig,
}

impl Settings {
    pub fn resolve(flags: &GlobalArgs, file: &FileConfig) -> Result<Self, CliError> {
        let hbar = flags.hbar.or(file.hbar).unwrap_or(1.0);
        if !(hbar.is_finite() && hbar > 0.0) {
            return Err(CliError::usage(format!("--hbar must be positive, got {hbar}")));
        }
        let mut geometry = GeometryConfig::default();
        if let Some(t) = flags.quad_rel_tol.or(file.quad_rel_tol) {
            geometry.quad.rel_tol = t;
        }
        if let Some(h) = flags.fd_step.or(file.fd_step) {
            geometry.fd.base_step = h;
        }
        geometry.quad.validate()?;
        if !(geometry.fd.base_step.is_finite() && geometry.fd.base_step > 0.0) {
            return Err(CliError::usage("--fd-step must be positive"));
        }
        let jobs = flags.jobs.or(file.jobs).unwrap_or(0);
        Ok(Self {
            model: flags.model.clone().or_else(|| file.model.clone()),
            hbar,
            format: flags.format.or(file.format).unwrap_or_default(),
            output: flags.output.clone().or_else(|| file.output.clone()),
            jobs,
            geometry,
        })
    }

    pub fn model(&self) -> Result<ModelSpec, CliError> {
        let name = self.model.as_deref().ok_or_else(|| CliError::usage("--model is required"))?;
        Ok(models::get(name, self.hbar)?)
    }
}

/// Flag values on top of the config file's `params`.
pub fn merge_params(flags: BTreeMap<String, f64>, file: &FileConfig) -> BTreeMap<String, f64> {
    let mut p = file.params.clone().unwrap_or_default();
    p.extend(flags);
    p
}

/// Orders named values by the model's parameter list, rejecting extras and gaps.
pub fn ordered(model: &ModelSpec, given: &BTreeMap<String, f64>) -> Result<Vec<f64>, CliError> {
    let names = model.parameter_names();
    if let Some(extra) = given.keys().find(|k| !names.contains(k)) {
        return Err(CliError::usage(format!(
            "{} has no parameter `{extra}`; expected {}",
            model.name,
            names.join(", ")
        )));
    }
    names
        .iter()
        .map(|n| {
            given
                .get(n)
                .copied()
                .ok_or_else(|| CliError::usage(format!("missing --{n} for {}", model.name)))
        })
        .collect()
}

pub struct SweepSpec {
    pub model: ModelSpec,
    pub axes: Vec<Axis>,
    pub fixed: BTreeMap<String, f64>,
    pub n: u32,
    pub outputs: Vec<String>,
}

impl SweepSpec {
    /// Full parameter vectors in lexicographic order of grid indices.
    pub fn points(&self) -> Vec<Vec<f64>> {
        let names = self.model.parameter_names();
        let values: Vec<Vec<f64>> = self.axes.iter().map(Axis::values).collect();
        let total: usize = values.iter().map(Vec::len).product();
        let mut out = Vec::with_capacity(total);
        let mut idx = vec![0usize; values.len()];
        for _ in 0..total {
            let mut named = self.fixed.clone();
            for (a, &i) in idx.iter().enumerate() {
                named.insert(self.axes[a].param.clone(), values[a][i]);
            }
            out.push(names.iter().map(|n| named[n]).collect());
            for a in (0..idx.len()).rev() {
                idx[a] += 1;
                if idx[a] < values[a].len() {
                    break;
                }
                idx[a] = 0;
            }
        }
        out
    }
}

pub fn sweep_spec(
    settings: &Settings,
    file: &FileConfig,
    grid: &[String],
    fix: &[String],
    n: Option<u32>,
    out: &[String],
) -> Result<SweepSpec, CliError> {
    let model = settings.model()?;
    let axes = if grid.is_empty() {
        file.grid.clone().unwrap_or_default()
    } else {
        grid.iter().map(|g| Axis::parse(g)).collect::<Result<_, _>>()?
    };
    let mut fixed = file.fixed.clone().unwrap_or_default();
    for f in fix {
        let (k, v) = f
            .split_once('=')
            .ok_or_else(|| CliError::usage(format!("bad --fix `{f}`; expected name=value")))?;
        let v: f64 = v.parse().map_err(|_| CliError::usage(format!("bad value in --fix `{f}`")))?;
        fixed.insert(k.trim().to_string(), v);
    }
    let names = model.parameter_names();
    for ax in &axes {
        let Some(i) = names.iter().position(|n| *n == ax.param) else {
            return Err(CliError::usage(format!("{} has no parameter `{}`", model.name, ax.param)));
        };
        if ax.count == 0 {
            return Err(CliError::usage(format!("grid axis `{}` needs count >= 1", ax.param)));
        }
        if ax.scale == Scale::Log && !(ax.min > 0.0 && ax.max > 0.0) {
            return Err(CliError::usage(format!("log axis `{}` needs positive bounds", ax.param)));
        }
        let range = &model.system.parameters.ranges()[i];
        let hi = if ax.count == 1 { ax.min } else { ax.max };
        if !range.contains_segment(ax.min, hi) {
            return Err(CliError::usage(format!(
                "grid `{}` over [{}, {}] leaves the parameter domain",
                ax.param, ax.min, hi
            )));
        }
        fixed.remove(&ax.param);
    }
    let mut all: BTreeMap<String, f64> = fixed.clone();
    for ax in &axes {
        all.insert(ax.param.clone(), ax.min);
    }
    ordered(&model, &all)?;
    if axes.iter().enumerate().any(|(i, a)| axes[..i].iter().any(|b| b.param == a.param)) {
        return Err(CliError::usage("a parameter appears twice in the grid"));
    }
    let outputs = if out.is_empty() { file.out.clone().unwrap_or_default() } else { out.to_vec() };
    Ok(SweepSpec {
        model,
        axes,
        fixed,
        n: n.or(file.n).unwrap_or(0),
        outputs,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn axis_parsing() {
        let a = Axis::parse("omega=0.9:1.2:4").unwrap();
        assert_eq!(a.values().len(), 4);
        assert_eq!(a.values()[3], 1.2);
        let l = Axis::parse("k2=1e-4:1:5:log").unwrap();
        let v = l.values();
        assert!((v[1] - 1e-3).abs() < 1e-15 && (v[4] - 1.0).abs() < 1e-15);
        assert!(Axis::parse("k2=1:2").is_err());
        assert!(Axis::parse("k2=1:2:3:cubic").is_err());
    }

    #[test]
    fn single_count_axis_is_its_minimum() {
        let a = Axis::parse("lambda=0.5:9:1").unwrap();
        assert_eq!(a.values(), vec![0.5]);
    }

    #[test]
    fn config_rejects_unknown_keys() {
        assert!(serde_json::from_str::<FileConfig>(r#"{"modle": "x"}"#).is_err());
        let c: FileConfig = serde_json::from_str(r#"{"model": "flat-oscillator", "params": {"omega": 2}}"#).unwrap();
        assert_eq!(c.params.unwrap()["omega"], 2.0);
    }
}
