//! Natural cubic spline on uniformly spaced nodes.

/// Interpolant through `(start + j h, values[j])`; zero outside the node range.
#[derive(Debug, Clone, PartialEq)]
pub struct UniformSpline {
    start: f64,
    step: f64,
    values: Vec<f64>,
    second: Vec<f64>,
}

impl UniformSpline {
    pub fn new(start: f64, step: f64, values: Vec<f64>) -> Self {
        let n = values.len();
        let mut second = vec![0.0; n];
        if n > 2 {
            // Tridiagonal system for the interior second derivatives: [1 4 1] m = 6Δ²y/h².
            let m = n - 2;
            let mut c = vec![0.0; m];
            let mut r: Vec<f64> = (1..n - 1)
                .map(|j| 6.0 * (values[j + 1] - 2.0 * values[j] + values[j - 1]) / (step * step))
                .collect();
            let mut diag = 4.0;
            c[0] = 1.0 / diag;
            r[0] /= diag;
            for i in 1..m {
                diag = 4.0 - c[i - 1];
                c[i] = 1.0 / diag;
                r[i] = (r[i] - r[i - 1]) / diag;
            }
            for i in (0..m - 1).rev() {
                r[i] -= c[i] * r[i + 1];
            }
            second[1..n - 1].copy_from_slice(&r);
        }
        Self {
            start,
            step,
            values,
            second,
        }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn end(&self) -> f64 {
        self.start + self.step * (self.values.len().saturating_sub(1)) as f64
    }

    pub fn eval(&self, q: f64) -> f64 {
        let n = self.values.len();
        if n < 2 || !(q >= self.start && q <= self.end()) {
            return 0.0;
        }
        let s = (q - self.start) / self.step;
        let j = (s.floor() as usize).min(n - 2);
        let t = s - j as f64;
        let u = 1.0 - t;
        let h2 = self.step * self.step / 6.0;
        u * self.values[j]
            + t * self.values[j + 1]
            + h2 * ((u * u * u - u) * self.second[j] + (t * t * t - t) * self.second[j + 1])
    }
}
