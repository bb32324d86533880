//! Natural cubic spline through strictly increasing knots.

use crate::error::{Error, Result};

#[derive(Debug, Clone)]
pub struct NaturalSpline<'a> {
    x: &'a [f64],
    y: &'a [f64],
    /// Second derivatives at the knots; zero at both ends.
    m: Vec<f64>,
}

impl<'a> NaturalSpline<'a> {
    pub fn new(x: &'a [f64], y: &'a [f64]) -> Result<Self> {
        let n = x.len();
        if y.len() != n {
            return Err(Error::LengthMismatch { expected: n, actual: y.len() });
        }
        if n < 3 {
            return Err(Error::TooShort { n, min: 3 });
        }
        if let Some(i) = x.windows(2).position(|w| w[1] <= w[0]) {
            return Err(Error::NonMonotoneGrid { index: i + 1 });
        }

        // Tridiagonal system for interior second derivatives (Thomas algorithm).
        let mut m = vec![0.0; n];
        let mut c_prime = vec![0.0; n];
        let mut d_prime = vec![0.0; n];
        for i in 1..n - 1 {
            let h0 = x[i] - x[i - 1];
            let h1 = x[i + 1] - x[i];
            let a = h0;
            let b = 2.0 * (h0 + h1);
            let c = h1;
            let d = 6.0 * ((y[i + 1] - y[i]) / h1 - (y[i] - y[i - 1]) / h0);
            let denom = b - a * c_prime[i - 1];
            c_prime[i] = c / denom;
            d_prime[i] = (d - a * d_prime[i - 1]) / denom;
        }
        for i in (1..n - 1).rev() {
            m[i] = d_prime[i] - c_prime[i] * m[i + 1];
        }
        Ok(Self { x, y, m })
    }

    /// Evaluates the spline; points outside the knot range extrapolate the end cubic.
    pub fn eval(&self, t: f64) -> f64 {
        let n = self.x.len();
        let i = match self.x.partition_point(|&v| v <= t) {
            0 => 0,
            p if p >= n => n - 2,
            p => p - 1,
        };
        self.eval_segment(i, t)
    }

    fn eval_segment(&self, i: usize, t: f64) -> f64 {
        let (x0, x1) = (self.x[i], self.x[i + 1]);
        let h = x1 - x0;
        let a = (x1 - t) / h;
        let b = (t - x0) / h;
        a * self.y[i]
            + b * self.y[i + 1]
            + ((a * a * a - a) * self.m[i] + (b * b * b - b) * self.m[i + 1]) * h * h / 6.0
    }

    /// Evaluates at increasing query points with a single forward scan.
    pub fn eval_sorted(&self, ts: &[f64]) -> Vec<f64> {
        let n = self.x.len();
        let mut seg = 0usize;
        ts.iter()
            .map(|&t| {
                while seg + 2 < n && t > self.x[seg + 1] {
                    seg += 1;
                }
                self.eval_segment(seg, t)
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn interpolates_knots_exactly() {
        let x: Vec<f64> = (0..20).map(|i| (i as f64).powf(1.3)).collect();
        let y: Vec<f64> = x.iter().map(|v| v.sin()).collect();
        let s = NaturalSpline::new(&x, &y).unwrap();
        for (xi, yi) in x.iter().zip(&y) {
            assert!((s.eval(*xi) - yi).abs() < 1e-12);
        }
        let sorted = s.eval_sorted(&x);
        for (a, b) in sorted.iter().zip(&y) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn reproduces_linear_functions() {
        let x: Vec<f64> = vec![0.0, 0.5, 1.7, 2.0, 3.3, 4.0];
        let y: Vec<f64> = x.iter().map(|v| 3.0 * v - 1.0).collect();
        let s = NaturalSpline::new(&x, &y).unwrap();
        for t in [0.1, 1.0, 2.5, 3.9] {
            assert!((s.eval(t) - (3.0 * t - 1.0)).abs() < 1e-12);
        }
    }

    #[test]
    fn smooth_function_error_is_small() {
        let x: Vec<f64> = (0..200).map(|i| i as f64 * 0.05).collect();
        let y: Vec<f64> = x.iter().map(|v| (2.0 * v).cos()).collect();
        let s = NaturalSpline::new(&x, &y).unwrap();
        let t = 4.321;
        assert!((s.eval(t) - (2.0 * t).cos()).abs() < 1e-5);
    }

    #[test]
    fn rejects_unsorted_knots() {
        let x = [0.0, 2.0, 1.0];
        let y = [0.0, 0.0, 0.0];
        assert!(NaturalSpline::new(&x, &y).is_err());
    }
}
