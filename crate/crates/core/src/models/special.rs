//! Special functions used by the closed-form states.

/// Euler–Mascheroni constant.
pub const EULER_GAMMA: f64 = 0.577_215_664_901_532_860_606_512_090_082_402_43;

/// Physicists' Hermite polynomial `H_n(z)` by the three-term recurrence.
pub fn hermite(n: u32, z: f64) -> f64 {
    let (mut h0, mut h1) = (1.0, 2.0 * z);
    match n {
        0 => h0,
        _ => {
            for k in 1..n {
                let h2 = 2.0 * z * h1 - 2.0 * k as f64 * h0;
                h0 = h1;
                h1 = h2;
            }
            h1
        }
    }
}

/// `H_n'(z) = 2n H_{n-1}(z)`.
pub fn hermite_derivative(n: u32, z: f64) -> f64 {
    if n == 0 {
        0.0
    } else {
        2.0 * n as f64 * hermite(n - 1, z)
    }
}

/// `1 / sqrt(2^n n!)`, accumulated as a product to stay finite for large `n`.
pub fn hermite_norm(n: u32) -> f64 {
    (1..=n).fold(1.0, |acc, k| acc / (2.0 * k as f64).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn low_orders() {
        assert_eq!(hermite(0, 3.7), 1.0);
        assert_eq!(hermite(1, 0.5), 1.0);
        assert_eq!(hermite(2, 1.0), 2.0);
        assert_eq!(hermite(3, 2.0), 8.0 * 8.0 - 12.0 * 2.0);
    }

    #[test]
    fn matches_explicit_polynomials() {
        for z in [-1.3f64, -0.2, 0.0, 0.7, 2.1] {
            let h4 = 16.0 * z.powi(4) - 48.0 * z * z + 12.0;
            let h5 = 32.0 * z.powi(5) - 160.0 * z.powi(3) + 120.0 * z;
            assert!((hermite(4, z) - h4).abs() < 1e-10 * h4.abs().max(1.0));
            assert!((hermite(5, z) - h5).abs() < 1e-10 * h5.abs().max(1.0));
            assert!((hermite_derivative(5, z) - 10.0 * hermite(4, z)).abs() < 1e-12);
        }
    }

    #[test]
    fn norm_factor() {
        assert_eq!(hermite_norm(0), 1.0);
        assert!((hermite_norm(3) - 1.0 / 48f64.sqrt()).abs() < 1e-15);
        assert!(hermite_norm(30).is_finite() && hermite_norm(30) > 0.0);
    }
}
