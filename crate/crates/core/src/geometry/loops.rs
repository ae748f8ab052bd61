//! Line integral of the Berry connection around a closed polyline.

use super::{berry_connection, GeometryConfig};
use crate::error::{Error, Result};
use crate::types::{ParameterPoint, QuantumNumber, QuantumSystem};

const PANELS: usize = 2;
const ORDER: usize = 10;

/// Gauss–Legendre nodes and weights on `[-1, 1]`.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        let mut z = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, z);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * z * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            let p = if n == 0 { 1.0 } else { p1 };
            dp = n as f64 * (z * p - p0) / (z * z - 1.0);
            let dz = p / dp;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        x[i] = -z;
        x[n - 1 - i] = z;
        w[i] = 2.0 / ((1.0 - z * z) * dp * dp);
        w[n - 1 - i] = w[i];
    }
    (x, w)
}

/// `∮ β · dλ` along the polyline through `vertices`; the loop is closed back to
/// the first vertex if the last one differs from it.
pub fn berry_phase_loop(
    sys: &QuantumSystem,
    vertices: &[Vec<f64>],
    n: QuantumNumber,
    cfg: &GeometryConfig,
) -> Result<f64> {
    if vertices.len() < 2 {
        return Ok(0.0);
    }
    let m = sys.num_parameters();
    if let Some(v) = vertices.iter().find(|v| v.len() != m) {
        return Err(Error::DimensionMismatch {
            field: "loop vertex",
            expected: m,
            found: v.len(),
        });
    }
    let mut path = vertices.to_vec();
    if path.first() != path.last() {
        path.push(path[0].clone());
    }
    let (gx, gw) = gauss_legendre(ORDER);
    let mut total = 0.0;
    for edge in path.windows(2) {
        let (p, q) = (&edge[0], &edge[1]);
        let dir: Vec<f64> = q.iter().zip(p).map(|(a, b)| a - b).collect();
        if dir.iter().all(|d| *d == 0.0) {
            continue;
        }
        for panel in 0..PANELS {
            let t0 = panel as f64 / PANELS as f64;
            let half = 0.5 / PANELS as f64;
            for (xi, wi) in gx.iter().zip(&gw) {
                let t = t0 + half * (1.0 + xi);
                let point: Vec<f64> = p.iter().zip(&dir).map(|(a, d)| a + t * d).collect();
                let l: ParameterPoint = sys.point(point)?;
                let beta = berry_connection(sys, &l, n, cfg)?.values;
                let dot: f64 = beta.iter().zip(&dir).map(|(b, d)| b * d).sum();
                total += wi * half * dot;
            }
        }
    }
    Ok(total)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gauss_legendre_integrates_polynomials() {
        for n in [1, 2, 5, 10] {
            let (x, w) = gauss_legendre(n);
            for deg in 0..2 * n {
                let s: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(deg as i32)).sum();
                let exact = if deg % 2 == 1 { 0.0 } else { 2.0 / (deg as f64 + 1.0) };
                assert!((s - exact).abs() < 1e-13, "n={n} deg={deg}: {s}");
            }
        }
    }
}
