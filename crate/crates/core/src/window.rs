use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

/// Taper applied to a spectral record before a transform.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WindowKind {
    #[default]
    Hann,
    Rectangular,
}

impl WindowKind {
    pub fn coefficients(self, n: usize) -> Vec<f64> {
        match self {
            WindowKind::Hann => hann_periodic(n),
            WindowKind::Rectangular => vec![1.0; n],
        }
    }
}

/// Periodic Hann window, `w[i] = 0.5 * (1 - cos(2*pi*i/n))`.
///
/// `w[0]` is exactly zero; the last sample is `sin^2(pi/n)`.
pub fn hann_periodic(n: usize) -> Vec<f64> {
    (0..n)
        .map(|i| {
            let s = (PI * i as f64 / n as f64).sin();
            s * s
        })
        .collect()
}
