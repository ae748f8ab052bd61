//! `cqgt`: single points, sweeps, dual-route validation, spectra and Morse-like
//! phase portraits on the command line.

mod config;
mod output;
mod record;
mod spectrum;
mod validate;

use std::collections::BTreeMap;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use curved_qgt::Error;
use serde::Deserialize;

use crate::config::{FileConfig, Settings};

#[derive(Parser, Debug)]
#[command(name = "cqgt", version, about = "Quantum geometric tensor on curved configuration spaces")]
struct Cli {
    #[command(flatten)]
    global: GlobalArgs,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug, Clone, Default)]
pub struct GlobalArgs {
    /// Registered model name.
    #[arg(long, global = true)]
    pub model: Option<String>,
    /// Reduced Planck constant.
    #[arg(long, global = true)]
    pub hbar: Option<f64>,
    #[arg(long, global = true, value_enum)]
    pub format: Option<Format>,
    /// Destination file; `-` or `stdout` for standard output.
    #[arg(long, global = true)]
    pub output: Option<String>,
    /// JSON file with defaults for every flag. Flags win.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Worker threads.
    #[arg(long, global = true)]
    pub jobs: Option<usize>,
    #[arg(long, global = true)]
    pub quad_rel_tol: Option<f64>,
    /// Base finite-difference step in parameter space.
    #[arg(long, global = true)]
    pub fd_step: Option<f64>,
}

#[derive(ValueEnum, Deserialize, Debug, Clone, Copy, PartialEq, Eq, Default)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    #[default]
    Csv,
    Jsonl,
}

/// Named parameter values. Each model reads the subset it declares.
#[derive(Args, Debug, Clone, Default)]
pub struct ParamArgs {
    #[arg(long, allow_negative_numbers = true)]
    pub lambda: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    pub omega: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    pub a: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    pub b: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    pub c: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    pub k1: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    pub k2: Option<f64>,
}

impl ParamArgs {
    pub fn given(&self) -> BTreeMap<String, f64> {
        [
            ("lambda", self.lambda),
            ("omega", self.omega),
            ("a", self.a),
            ("b", self.b),
            ("c", self.c),
            ("k1", self.k1),
            ("k2", self.k2),
        ]
        .into_iter()
        .filter_map(|(k, v)| v.map(|v| (k.to_string(), v)))
        .collect()
    }
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Tensors at one parameter point.
    Compute {
        #[command(flatten)]
        params: ParamArgs,
        #[arg(long)]
        n: Option<u32>,
        /// Quantities: qmt, qgt, berry_curvature, berry_connection, det, subdet:<param>, fidelity_chi.
        #[arg(long, value_delimiter = ',')]
        out: Vec<String>,
    },
    /// Tensors over a parameter grid, one row per point.
    Sweep {
        /// `name=min:max:count[:log]`, repeatable; the first axis varies slowest.
        #[arg(long, allow_hyphen_values = true)]
        grid: Vec<String>,
        /// `name=value`, repeatable.
        #[arg(long, allow_hyphen_values = true)]
        fix: Vec<String>,
        #[arg(long)]
        n: Option<u32>,
        #[arg(long, value_delimiter = ',')]
        out: Vec<String>,
    },
    /// Geometric against fidelity route, gauge and normalization checks.
    Validate {
        #[command(flatten)]
        params: ParamArgs,
        #[arg(long)]
        n: Option<u32>,
        /// Random parameter points when no explicit point is given.
        #[arg(long)]
        samples: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
        /// Scales the state by this factor before checking (test hook).
        #[arg(long, hide = true)]
        misnormalize: Option<f64>,
    },
    /// Lowest levels of the model's Laplace-Beltrami Hamiltonian.
    Spectrum {
        #[command(flatten)]
        params: ParamArgs,
        #[arg(long)]
        k: Option<usize>,
        #[arg(long)]
        points: Option<usize>,
    },
    /// Level sets of the Morse-like classical Hamiltonian.
    PhasePortrait {
        #[arg(long, allow_negative_numbers = true)]
        omega: Option<f64>,
        #[arg(long, allow_negative_numbers = true)]
        lambda: Option<f64>,
        /// Repeatable.
        #[arg(long, allow_negative_numbers = true)]
        energy: Vec<f64>,
        /// Use `E_n = (n + 1/2) ħω` for the first `levels` values of `n`.
        #[arg(long)]
        levels: Option<usize>,
        #[arg(long)]
        samples: Option<usize>,
    },
}

/// Failure carried to the exit status and printed as a JSON object on stderr.
#[derive(Debug)]
pub struct CliError {
    pub code: u8,
    pub kind: &'static str,
    pub message: String,
}

impl CliError {
    pub fn usage(message: impl Into<String>) -> Self {
        Self {
            code: 2,
            kind: "usage",
            message: message.into(),
        }
    }

    pub fn validation(message: impl Into<String>) -> Self {
        Self {
            code: 1,
            kind: "validation",
            message: message.into(),
        }
    }

    pub fn io(e: std::io::Error) -> Self {
        Self {
            code: 3,
            kind: "io",
            message: e.to_string(),
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        match e {
            Error::UnknownModel(_)
            | Error::InvalidParameter(_)
            | Error::OutsideParameterDomain { .. }
            | Error::DimensionMismatch { .. }
            | Error::InvalidConfig(_) => Self::usage(e.to_string()),
            _ => Self {
                code: 3,
                kind: "numerical",
                message: e.to_string(),
            },
        }
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    let file = match &cli.global.config {
        Some(path) => FileConfig::load(path)?,
        None => FileConfig::default(),
    };
    let settings = Settings::resolve(&cli.global, &file)?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(settings.jobs)
        .build()
        .map_err(|e| CliError::usage(e.to_string()))?;
    pool.install(|| match cli.command {
        Command::Compute { params, n, out } => {
            let params = config::merge_params(params.given(), &file);
            let n = n.or(file.n).unwrap_or(0);
            let out = if out.is_empty() { file.out.clone().unwrap_or_default() } else { out };
            record::compute(&settings, &params, n, &out)
        }
        Command::Sweep { grid, fix, n, out } => {
            let spec = config::sweep_spec(&settings, &file, &grid, &fix, n, &out)?;
            record::sweep(&settings, &spec)
        }
        Command::Validate {
            params,
            n,
            samples,
            seed,
            misnormalize,
        } => {
            let given = params.given();
            let point = if given.is_empty() { file.params.clone() } else { Some(given) };
            let opts = validate::Options {
                point,
                n: n.or(file.n).unwrap_or(0),
                samples: samples.or(file.samples).unwrap_or(5),
                seed: seed.or(file.seed).unwrap_or(1),
                misnormalize,
            };
            validate::run(&settings, &opts)
        }
        Command::Spectrum { params, k, points } => {
            let params = config::merge_params(params.given(), &file);
            let k = k.or(file.k).unwrap_or(4);
            let points = points.or(file.points).unwrap_or(curved_qgt::spectrum::DEFAULT_POINTS);
            spectrum::levels(&settings, &params, k, points)
        }
        Command::PhasePortrait {
            omega,
            lambda,
            energy,
            levels,
            samples,
        } => {
            let params = file.params.clone().unwrap_or_default();
            let omega = omega.or(params.get("omega").copied());
            let lambda = lambda.or(params.get("lambda").copied());
            let (Some(omega), Some(lambda)) = (omega, lambda) else {
                return Err(CliError::usage("phase-portrait needs --omega and --lambda"));
            };
            let energies = if !energy.is_empty() {
                energy
            } else if let Some(levels) = levels.or(file.levels) {
                (0..levels).map(|n| (n as f64 + 0.5) * settings.hbar * omega).collect()
            } else {
                file.energies.clone().unwrap_or_default()
            };
            let samples = samples.or(file.samples).unwrap_or(200);
            spectrum::portrait(&settings, omega, lambda, &energies, samples)
        }
    })
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let obj = serde_json::json!({ "error": { "code": e.code, "kind": e.kind, "message": e.message } });
            eprintln!("{obj}");
            ExitCode::from(e.code)
        }
    }
}
