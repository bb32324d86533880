//! Thread-local FFT plan cache and the analytic-signal construction.

use std::cell::RefCell;
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

thread_local! {
    static PLANNER: RefCell<FftPlanner<f64>> = RefCell::new(FftPlanner::new());
}

pub fn forward(n: usize) -> Arc<dyn Fft<f64>> {
    PLANNER.with(|p| p.borrow_mut().plan_fft_forward(n))
}

pub fn inverse(n: usize) -> Arc<dyn Fft<f64>> {
    PLANNER.with(|p| p.borrow_mut().plan_fft_inverse(n))
}

/// Unnormalized forward DFT of a real sequence, zero-padded to `len`.
pub fn real_spectrum(x: &[f64], len: usize) -> Vec<Complex64> {
    let mut buf = vec![Complex64::new(0.0, 0.0); len.max(x.len())];
    for (b, &v) in buf.iter_mut().zip(x) {
        b.re = v;
    }
    forward(buf.len()).process(&mut buf);
    buf
}

/// Analytic signal: FFT, zero the negative-frequency half, double the
/// positive half, inverse FFT. The real part reproduces `x`.
pub fn analytic_signal(x: &[f64]) -> Vec<Complex64> {
    let n = x.len();
    if n == 0 {
        return Vec::new();
    }
    let mut buf = real_spectrum(x, n);
    let half = n / 2;
    for (i, b) in buf.iter_mut().enumerate() {
        let gain = if i == 0 || (n % 2 == 0 && i == half) {
            1.0
        } else if i < n.div_ceil(2) {
            2.0
        } else {
            0.0
        };
        *b *= gain / n as f64;
    }
    inverse(n).process(&mut buf);
    buf
}
