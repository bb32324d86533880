use std::f64::consts::PI;

use crate::error::{Error, Result};

/// Relative tolerance on the sample spacing for a grid to count as linear.
pub const LINEAR_TOLERANCE: f64 = 1e-9;

/// Pixel-to-angular-wavenumber map (rad/m), stored in increasing order.
#[derive(Debug, Clone, PartialEq)]
pub struct KGrid {
    k: Vec<f64>,
    k0: f64,
    is_linear: bool,
}

impl KGrid {
    /// Builds a grid from detector wavenumbers in either monotone direction.
    ///
    /// Decreasing input is reversed; callers holding samples aligned with the
    /// original order should use [`normalize_order`] instead.
    pub fn new(mut k: Vec<f64>) -> Result<Self> {
        if k.len() >= 2 && k[1] < k[0] {
            k.reverse();
        }
        Self::from_increasing(k)
    }

    /// Uniform grid `k_start + i * dk` for `i in 0..n`.
    pub fn linear(k_start: f64, dk: f64, n: usize) -> Result<Self> {
        if !(dk > 0.0) || !dk.is_finite() || !k_start.is_finite() {
            return Err(Error::NonMonotoneGrid { index: 0 });
        }
        Self::from_increasing((0..n).map(|i| k_start + i as f64 * dk).collect())
    }

    fn from_increasing(k: Vec<f64>) -> Result<Self> {
        if k.len() < 2 {
            return Err(Error::TooShort { n: k.len(), min: 2 });
        }
        if let Some(index) = k.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFiniteInput { what: "wavenumbers", index });
        }
        if let Some(i) = k.windows(2).position(|w| w[1] <= w[0]) {
            return Err(Error::NonMonotoneGrid { index: i + 1 });
        }
        let n = k.len();
        let mean = (k[n - 1] - k[0]) / (n - 1) as f64;
        let is_linear = k
            .windows(2)
            .all(|w| ((w[1] - w[0]) - mean).abs() <= LINEAR_TOLERANCE * mean);
        let k0 = if is_linear {
            k[n / 2]
        } else {
            k[0] + (n / 2) as f64 * mean
        };
        Ok(Self { k, k0, is_linear })
    }

    pub fn len(&self) -> usize {
        self.k.len()
    }

    pub fn is_empty(&self) -> bool {
        self.k.is_empty()
    }

    pub fn wavenumbers(&self) -> &[f64] {
        &self.k
    }

    /// Expansion point of the phase model: `k[N/2]` of the linearized grid.
    pub fn k0(&self) -> f64 {
        self.k0
    }

    pub fn is_linear(&self) -> bool {
        self.is_linear
    }

    pub fn k_min(&self) -> f64 {
        self.k[0]
    }

    pub fn k_max(&self) -> f64 {
        self.k[self.k.len() - 1]
    }

    /// Mean sample spacing (rad/m).
    pub fn spacing(&self) -> f64 {
        (self.k_max() - self.k_min()) / (self.len() - 1) as f64
    }

    /// Sampled bandwidth `N * dk`.
    pub fn span(&self) -> f64 {
        self.len() as f64 * self.spacing()
    }

    /// Depth (m) covered by one bin of an `fft_len`-point transform.
    pub fn depth_per_bin(&self, fft_len: usize) -> f64 {
        PI / (fft_len as f64 * self.spacing())
    }

    /// Largest unambiguous reflector depth, `N * pi / (2 * span)`.
    pub fn max_depth(&self) -> f64 {
        PI / (2.0 * self.spacing())
    }

    /// Uniform grid with the same extent and length.
    pub fn linearized(&self) -> KGrid {
        if self.is_linear {
            return self.clone();
        }
        let n = self.len();
        let dk = self.spacing();
        let start = self.k_min();
        let mut k: Vec<f64> = (0..n).map(|i| start + i as f64 * dk).collect();
        k[n - 1] = self.k_max();
        KGrid {
            k0: k[n / 2],
            k,
            is_linear: true,
        }
    }

    /// Bitwise identity of the wavenumber arrays.
    pub fn same_as(&self, other: &KGrid) -> bool {
        self.k.len() == other.k.len()
            && self
                .k
                .iter()
                .zip(&other.k)
                .all(|(a, b)| a.to_bits() == b.to_bits())
    }
}

/// Reverses `samples` and `k` together when `k` is decreasing.
pub fn normalize_order(samples: &mut [f64], k: &mut [f64]) -> bool {
    if k.len() >= 2 && k[1] < k[0] {
        samples.reverse();
        k.reverse();
        true
    } else {
        false
    }
}
