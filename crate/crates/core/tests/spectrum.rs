use curved_qgt::geometry::{self, GeometryConfig};
use curved_qgt::models;
use curved_qgt::spectrum::{
    build_hamiltonian, eigensolve, numerical_wavefunction_family, solve_levels, Boundary, FamilyConfig, Grid1D,
};
use curved_qgt::Error;

#[test]
fn flat_oscillator_ground_level() {
    let m = models::get("flat-oscillator", 1.0).unwrap();
    let p = m.point(&[1.0]).unwrap();
    let l = solve_levels(&m, &p, 1, 2000).unwrap();
    assert!((l[0].energy - 0.5).abs() < 1e-5, "{}", l[0].energy);
}

#[test]
fn anharmonic_levels_are_equally_spaced() {
    let m = models::get("anharmonic-1d", 1.0).unwrap();
    let p = m.point(&[1.0, 1.0]).unwrap();
    let l = solve_levels(&m, &p, 4, 2000).unwrap();
    for (n, lev) in l.iter().enumerate() {
        let exact = n as f64 + 0.5;
        assert!((lev.energy - exact).abs() < 1e-4 * exact, "{n}: {}", lev.energy);
    }
    for w in l.windows(2) {
        assert!((w[1].energy - w[0].energy - 1.0).abs() < 1e-4);
    }
}

#[test]
fn generalized_uses_reduced_frequency() {
    let m = models::get("generalized-anharmonic", 1.0).unwrap();
    let p = m.point(&[1.0, 0.5, 1.0]).unwrap();
    let l = solve_levels(&m, &p, 3, 2000).unwrap();
    let w = 0.75f64.sqrt();
    for (n, lev) in l.iter().enumerate() {
        let exact = (n as f64 + 0.5) * w;
        assert!((lev.energy - exact).abs() < 1e-4 * exact, "{n}: {} vs {exact}", lev.energy);
    }
}

#[test]
fn morse_ground_level_both_signs() {
    let m = models::get("morse-like", 1.0).unwrap();
    for lam in [1.0, -1.0, 0.3] {
        let p = m.point(&[lam, 1.0]).unwrap();
        let l = solve_levels(&m, &p, 1, 2000).unwrap();
        assert!((l[0].energy - 0.5).abs() < 5e-5, "{lam}: {}", l[0].energy);
    }
}

#[test]
fn refinement_is_second_order() {
    let m = models::get("anharmonic-1d", 1.0).unwrap();
    let p = m.point(&[1.0, 1.0]).unwrap();
    let e1 = (solve_levels(&m, &p, 2, 500).unwrap()[1].energy - 1.5).abs();
    let e2 = (solve_levels(&m, &p, 2, 1000).unwrap()[1].energy - 1.5).abs();
    assert!(e1 / e2 >= 3.5, "{e1} / {e2}");
}

#[test]
fn eigenvectors_are_weight_orthonormal() {
    let m = models::get("anharmonic-1d", 1.0).unwrap();
    let p = m.point(&[1.0, 1.0]).unwrap();
    let g = Grid1D::cell_centered(0.0, 10.0, 1000, Boundary::Neumann, Boundary::Dirichlet).unwrap();
    let dh = build_hamiltonian(&m, &p, &g).unwrap();
    let pairs = eigensolve(&dh, 4).unwrap();
    for (i, a) in pairs.iter().enumerate() {
        for (j, b) in pairs.iter().enumerate() {
            let ip: f64 = (0..dh.len()).map(|k| a.vector[k] * dh.weights[k] * b.vector[k]).sum();
            assert!((ip - if i == j { 1.0 } else { 0.0 }).abs() < 1e-8);
        }
    }
}

#[test]
fn two_dimensional_model_has_no_spectral_problem() {
    let m = models::get("coupled-anharmonic-2d", 1.0).unwrap();
    let p = m.point(&[1.0, 1.0, 1.0, 1.0]).unwrap();
    assert!(solve_levels(&m, &p, 1, 100).is_err());
}

#[test]
fn numerical_family_reproduces_anharmonic_metric() {
    let m = models::get("anharmonic-1d", 1.0).unwrap();
    let p = m.point(&[1.0, 1.0]).unwrap();
    let cfg = FamilyConfig::default();
    let fam = numerical_wavefunction_family(&m, &p, &cfg).unwrap();
    let gcfg = GeometryConfig {
        fd: cfg.fd,
        ..GeometryConfig::default()
    };
    let g = geometry::qmt(&fam.system, &p, 0.into(), &gcfg).unwrap();
    for v in g.iter() {
        assert!((v - 0.125).abs() < 5e-3 * 0.125, "{g}");
    }
}

#[test]
fn numerical_family_reproduces_flat_metric() {
    let m = models::get("flat-oscillator", 1.0).unwrap();
    let p = m.point(&[1.3]).unwrap();
    let cfg = FamilyConfig::default();
    let fam = numerical_wavefunction_family(&m, &p, &cfg).unwrap();
    let gcfg = GeometryConfig {
        fd: cfg.fd,
        ..GeometryConfig::default()
    };
    let g = geometry::qmt(&fam.system, &p, 0.into(), &gcfg).unwrap();
    let exact = 1.0 / (8.0 * 1.3 * 1.3);
    assert!((g[(0, 0)] - exact).abs() < 5e-3 * exact, "{g}");
}

#[test]
fn close_levels_are_reported() {
    let m = models::get("flat-oscillator", 1.0).unwrap();
    let p = m.point(&[1.0]).unwrap();
    let cfg = FamilyConfig {
        gap_threshold: 2.0,
        points: 400,
        ..FamilyConfig::default()
    };
    match numerical_wavefunction_family(&m, &p, &cfg) {
        Err(Error::LevelCrossing { a, b, .. }) => assert_eq!((a, b), (0, 1)),
        other => panic!("expected a level-crossing error, got {other:?}"),
    }
}
