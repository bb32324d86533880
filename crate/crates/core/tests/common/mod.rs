#![allow(dead_code)]

use std::f64::consts::PI;

use num_complex::Complex64;
use octdisp_core::sim::{generate_fringe, SimScenario};
use octdisp_core::{preprocess, SpectralFringe};

/// Noiseless mirror on the calibration system, preprocessed to `Resampled`.
pub fn calibration_fringe(depth: f64, a2: f64) -> SpectralFringe {
    resampled(&SimScenario::calibration(depth, a2), 0)
}

pub fn resampled(s: &SimScenario, seed: u64) -> SpectralFringe {
    let (f, r, _) = generate_fringe(s, seed).unwrap();
    preprocess(&f, &r).unwrap()
}

/// Direct O(N^2) DFT magnitude at integer bin `m`.
pub fn naive_dft_magnitude(x: &[f64], m: usize) -> f64 {
    let n = x.len() as f64;
    x.iter()
        .enumerate()
        .fold(Complex64::new(0.0, 0.0), |acc, (i, &v)| {
            acc + Complex64::from_polar(v, -2.0 * PI * m as f64 * i as f64 / n)
        })
        .norm()
}

pub fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}
