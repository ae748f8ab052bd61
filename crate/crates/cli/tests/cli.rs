use std::process::{Command, Output};

fn cqgt(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_cqgt")).args(args).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

/// Header plus rows, cells as raw strings.
fn csv(o: &Output) -> (Vec<String>, Vec<Vec<String>>) {
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let text = stdout(o);
    let mut lines = text.lines();
    let header = lines.next().unwrap().split(',').map(String::from).collect();
    let rows = lines.map(|l| l.split(',').map(String::from).collect()).collect();
    (header, rows)
}

fn column(header: &[String], rows: &[Vec<String>], name: &str) -> Vec<f64> {
    let i = header.iter().position(|h| h == name).unwrap_or_else(|| panic!("no column {name}"));
    rows.iter().map(|r| r[i].parse().unwrap()).collect()
}

fn temp_path(tag: &str) -> std::path::PathBuf {
    std::env::temp_dir().join(format!("cqgt-{}-{tag}", std::process::id()))
}

#[test]
fn compute_anharmonic_metric() {
    let (h, rows) = csv(&cqgt(&["compute", "--model", "anharmonic-1d", "--lambda", "1", "--omega", "1", "--n", "0", "--out", "qmt"]));
    for c in ["G_11", "G_12", "G_22"] {
        assert!((column(&h, &rows, c)[0] - 0.125).abs() < 1e-6);
    }
}

#[test]
fn compute_generalized_curvature() {
    let o = cqgt(&[
        "compute", "--model", "generalized-anharmonic", "--lambda", "1", "--b", "0", "--c", "1", "--n", "0", "--out",
        "berry_curvature", "--format", "jsonl",
    ]);
    assert!(o.status.success());
    let v: serde_json::Value = serde_json::from_str(stdout(&o).trim()).unwrap();
    let f = &v["berry_curvature"];
    let expect = [[0.0, 2.0, 0.0], [-2.0, 0.0, -1.0], [0.0, 1.0, 0.0]];
    for i in 0..3 {
        for j in 0..3 {
            assert!((f[i][j].as_f64().unwrap() - expect[i][j] / 16.0).abs() < 1e-8, "{f}");
        }
    }
    assert_eq!(v["config"]["model"], "generalized-anharmonic");
}

#[test]
fn unknown_model_is_a_usage_error() {
    let o = cqgt(&["compute", "--model", "no-such-model", "--lambda", "1"]);
    assert_eq!(o.status.code(), Some(2));
    let err: serde_json::Value = serde_json::from_slice(&o.stderr).unwrap();
    assert!(err["error"]["message"].as_str().unwrap().contains("unknown model"));
}

#[test]
fn missing_and_extra_parameters_are_usage_errors() {
    assert_eq!(cqgt(&["compute", "--model", "anharmonic-1d", "--lambda", "1"]).status.code(), Some(2));
    let o = cqgt(&["compute", "--model", "anharmonic-1d", "--lambda", "1", "--omega", "1", "--k1", "2"]);
    assert_eq!(o.status.code(), Some(2));
    assert_eq!(cqgt(&["compute", "--bogus-flag"]).status.code(), Some(2));
}

#[test]
fn numerical_failure_exit_code() {
    // The fidelity stencil leaves λ > 0.
    let o = cqgt(&["compute", "--model", "anharmonic-1d", "--lambda", "1e-3", "--omega", "1", "--out", "fidelity_chi"]);
    assert_eq!(o.status.code(), Some(3), "{}", String::from_utf8_lossy(&o.stderr));
}

#[test]
fn morse_sweep_brackets_the_sign_change() {
    let o = cqgt(&["sweep", "--model", "morse-like", "--grid", "omega=0.9:1.2:50", "--fix", "lambda=0.05", "--out", "qmt"]);
    let (h, rows) = csv(&o);
    assert_eq!(rows.len(), 50);
    let w = column(&h, &rows, "omega");
    let g = column(&h, &rows, "G_12");
    let changes: Vec<usize> = (0..49).filter(|&i| g[i].signum() != g[i + 1].signum()).collect();
    assert_eq!(changes.len(), 1);
    let i = changes[0];
    let root = w[i] - g[i] * (w[i + 1] - w[i]) / (g[i + 1] - g[i]);
    assert!((root - 1.037).abs() <= 1e-3, "{root}");
}

#[test]
fn coupled_sweep_mixed_component_vanishes() {
    let o = cqgt(&[
        "sweep", "--model", "coupled-anharmonic-2d", "--grid", "k2=1e-4:1:5:log", "--fix", "k1=1", "--fix", "a=1", "--fix",
        "b=1", "--out", "qmt",
    ]);
    let (h, rows) = csv(&o);
    let gab: Vec<f64> = column(&h, &rows, "G_34").iter().map(|v| v.abs()).collect();
    assert!(gab.windows(2).all(|w| w[0] < w[1]), "{gab:?}");
    assert!(gab[0] < 1e-3);
}

#[test]
fn single_point_sweep_matches_compute() {
    let args = ["--model", "generalized-anharmonic", "--out", "qmt,berry_curvature,det,subdet:b"];
    let mut c = vec!["compute", "--lambda", "1.5", "--b", "0.2", "--c", "1.1"];
    c.extend(args);
    let mut s = vec!["sweep", "--grid", "lambda=1.5:3:1", "--fix", "b=0.2", "--fix", "c=1.1"];
    s.extend(args);
    assert_eq!(stdout(&cqgt(&c)), stdout(&cqgt(&s)));
}

#[test]
fn sweep_is_deterministic_across_thread_counts() {
    let base = ["sweep", "--model", "anharmonic-1d", "--grid", "lambda=0.5:2:4", "--grid", "omega=0.5:3:3", "--out", "qmt,qgt"];
    let one = cqgt(&[&base[..], &["--jobs", "1"]].concat());
    let four = cqgt(&[&base[..], &["--jobs", "4"]].concat());
    assert_eq!(one.stdout, four.stdout);
    let (h, rows) = csv(&one);
    assert_eq!(rows.len(), 12);
    // First axis varies slowest.
    let l = column(&h, &rows, "lambda");
    assert!(l[..3].iter().all(|&v| v == 0.5) && l[3] == 1.0);
}

#[test]
fn sweep_records_point_failures_and_continues() {
    // b² ≥ c leaves the admissible region for the last two points.
    let o = cqgt(&["sweep", "--model", "generalized-anharmonic", "--grid", "b=0:1.5:4", "--fix", "lambda=1", "--fix", "c=1"]);
    let (h, rows) = csv(&o);
    let e = h.iter().position(|c| c == "error").unwrap();
    let failed: Vec<bool> = rows.iter().map(|r| !r[e].is_empty()).collect();
    assert_eq!(failed, [false, false, true, true]);
    assert!(String::from_utf8_lossy(&o.stderr).contains("2 failed"));
}

#[test]
fn grid_outside_the_domain_is_refused() {
    let o = cqgt(&["sweep", "--model", "anharmonic-1d", "--grid", "lambda=-1:1:3", "--fix", "omega=1"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn emitted_numbers_round_trip() {
    let o = cqgt(&["sweep", "--model", "generalized-anharmonic", "--grid", "b=0:0.5:3", "--fix", "lambda=1.3", "--fix", "c=1.7", "--out", "qgt,berry_connection,fidelity_chi", "--format", "jsonl"]);
    assert!(o.status.success());
    for line in stdout(&o).lines() {
        let v: serde_json::Value = serde_json::from_str(line).unwrap();
        assert_eq!(serde_json::to_string(&v).unwrap(), line);
    }
    let (_, rows) = csv(&cqgt(&["compute", "--model", "morse-like", "--lambda", "0.3", "--omega", "1.7", "--out", "qmt,det"]));
    for cell in rows[0].iter().filter(|c| !c.is_empty()) {
        let v: f64 = cell.parse().unwrap();
        assert_eq!(&format!("{v:.16e}"), cell);
    }
}

#[test]
fn validate_passes_on_random_points() {
    let o = cqgt(&["validate", "--model", "anharmonic-1d", "--samples", "5"]);
    assert!(o.status.success(), "{}", stdout(&o));
    let o = cqgt(&["validate", "--model", "morse-like", "--lambda", "1", "--omega", "1"]);
    let (h, rows) = csv(&o);
    let route = rows.iter().find(|r| r[0] == "route_equivalence").unwrap();
    let i = h.iter().position(|c| c == "max_deviation").unwrap();
    assert!(route[i].parse::<f64>().unwrap() <= 1e-4);
}

#[test]
fn misnormalized_state_fails_validation() {
    let o = cqgt(&["validate", "--model", "anharmonic-1d", "--lambda", "1", "--omega", "1", "--misnormalize", "1.01"]);
    assert_eq!(o.status.code(), Some(1));
    let err: serde_json::Value = serde_json::from_slice(&o.stderr).unwrap();
    assert!(err["error"]["message"].as_str().unwrap().contains("normalization"));
}

#[test]
fn spectrum_levels() {
    let (h, rows) = csv(&cqgt(&["spectrum", "--model", "anharmonic-1d", "--lambda", "1", "--omega", "1", "--k", "4"]));
    let e = column(&h, &rows, "energy");
    for (n, v) in e.iter().enumerate() {
        assert!((v - (n as f64 + 0.5)).abs() < 1e-4);
    }
    let (h, rows) = csv(&cqgt(&["spectrum", "--model", "generalized-anharmonic", "--lambda", "1", "--b", "0.5", "--c", "1", "--k", "1"]));
    assert!((column(&h, &rows, "energy")[0] - 0.5 * 0.75f64.sqrt()).abs() < 1e-4);
    let (_, rows) = csv(&cqgt(&["spectrum", "--model", "anharmonic-1d", "--lambda", "1", "--omega", "1", "--k", "0"]));
    assert!(rows.is_empty());
}

#[test]
fn phase_portrait_level_sets() {
    let run = |lam: &str| csv(&cqgt(&["phase-portrait", "--omega", "1", "--lambda", lam, "--energy", "1", "--samples", "40"]));
    let (h, rows) = run("1");
    let x = column(&h, &rows, "x");
    let p = column(&h, &rows, "p");
    let turn = x.iter().zip(&p).any(|(x, p)| (x + 2f64.ln()).abs() < 1e-9 && p.abs() < 1e-9);
    assert!(turn);
    let (h2, rows2) = run("-1");
    let x2 = column(&h2, &rows2, "x");
    let p2 = column(&h2, &rows2, "p");
    let mut a: Vec<(f64, f64)> = x.iter().zip(&p).map(|(x, p)| (-x, *p)).collect();
    let mut b: Vec<(f64, f64)> = x2.into_iter().zip(p2).collect();
    a.sort_by(|u, v| u.partial_cmp(v).unwrap());
    b.sort_by(|u, v| u.partial_cmp(v).unwrap());
    assert_eq!(a.len(), b.len());
    assert!(a.iter().zip(&b).all(|(u, v)| (u.0 - v.0).abs() < 1e-12 && (u.1 - v.1).abs() < 1e-12));

    let (h, rows) = csv(&cqgt(&["phase-portrait", "--omega", "1", "--lambda", "1", "--energy", "0"]));
    assert_eq!(rows.len(), 1);
    let note = h.iter().position(|c| c == "note").unwrap();
    assert!(rows[0][1].is_empty() && !rows[0][note].is_empty());
}

#[test]
fn config_file_supplies_defaults_and_flags_override() {
    let path = temp_path("config.json");
    std::fs::write(&path, r#"{"model": "anharmonic-1d", "params": {"lambda": 1, "omega": 2}, "out": ["qmt"]}"#).unwrap();
    let p = path.to_str().unwrap();
    let (h, rows) = csv(&cqgt(&["compute", "--config", p]));
    assert!((column(&h, &rows, "G_22")[0] - 1.0 / 32.0).abs() < 1e-9);
    let (h, rows) = csv(&cqgt(&["compute", "--config", p, "--omega", "1"]));
    assert!((column(&h, &rows, "G_22")[0] - 0.125).abs() < 1e-9);
    std::fs::write(&path, r#"{"modle": "anharmonic-1d"}"#).unwrap();
    assert_eq!(cqgt(&["compute", "--config", p]).status.code(), Some(2));
    std::fs::remove_file(&path).ok();
}

#[test]
fn output_goes_to_the_named_file() {
    let path = temp_path("out.csv");
    let p = path.to_str().unwrap();
    let o = cqgt(&["compute", "--model", "flat-oscillator", "--omega", "2", "--output", p]);
    assert!(o.status.success() && o.stdout.is_empty());
    let text = std::fs::read_to_string(&path).unwrap();
    assert!(text.starts_with("omega,G_11"));
    std::fs::remove_file(&path).ok();
}
