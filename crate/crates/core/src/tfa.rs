//! Short-time Fourier transform of a resampled fringe, ridge extraction and
//! the ridge-variance objective.
//!
//! Columns of the map are spectral windows (one per evaluated wavenumber),
//! rows are depth bins with the DC-side rows removed. A dispersion-free
//! single reflector gives a flat ridge; residual quadratic phase tilts it.

use std::sync::Arc;

use ndarray::Array2;
use rayon::prelude::*;
use rustfft::Fft;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fft;
use crate::grid::KGrid;
use crate::signal::{SpectralFringe, Stage};
use crate::window::WindowKind;

/// Reference record length for the default window geometry.
pub const REFERENCE_RECORD: usize = 2048;
/// Peak-to-median ratio a column needs to enter the ridge.
pub const VALIDITY_RATIO: f64 = 10.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StftConfig {
    pub window_len: usize,
    pub overlap_len: usize,
    pub window: WindowKind,
    pub fft_len: usize,
    pub dc_exclusion_rows: usize,
}

impl Default for StftConfig {
    /// 1024-sample Hann windows overlapping by 1013 samples: 94 windows on a
    /// 2048-sample record. `floor(0.99 * 1024) = 1013` is also the only
    /// overlap that yields 94.
    fn default() -> Self {
        Self {
            window_len: 1024,
            overlap_len: 1013,
            window: WindowKind::Hann,
            fft_len: 1024,
            dc_exclusion_rows: 50,
        }
    }
}

impl StftConfig {
    /// Default geometry stretched to an `n`-sample record: half-record windows,
    /// hop scaled by `n / 2048`, so the map keeps 94 columns and the same depth
    /// bin size. Returns the plain default for `n <= 2048`.
    pub fn scaled_to(n: usize) -> Self {
        let base = Self::default();
        if n <= REFERENCE_RECORD {
            return base;
        }
        let scale = n / REFERENCE_RECORD;
        let window_len = base.window_len * scale;
        let hop = (base.window_len - base.overlap_len) * scale;
        Self {
            window_len,
            overlap_len: window_len - hop,
            fft_len: window_len,
            ..base
        }
    }

    pub fn hop(&self) -> usize {
        self.window_len - self.overlap_len
    }

    /// Rows left after DC exclusion.
    pub fn rows(&self) -> usize {
        self.fft_len / 2 - self.dc_exclusion_rows
    }

    pub fn validate(&self, n: usize) -> Result<()> {
        k_eval_count(n, self.window_len, self.overlap_len)?;
        if self.fft_len < self.window_len {
            return Err(Error::InvalidWindowParams(format!(
                "fft_len {} shorter than window {}",
                self.fft_len, self.window_len
            )));
        }
        if self.dc_exclusion_rows >= self.fft_len / 2 {
            return Err(Error::InvalidWindowParams(format!(
                "dc_exclusion_rows {} must be below fft_len/2 = {}",
                self.dc_exclusion_rows,
                self.fft_len / 2
            )));
        }
        Ok(())
    }
}

/// Number of evaluated wavenumbers, `floor((n - l) / (m - l))`.
pub fn k_eval_count(n: usize, m: usize, l: usize) -> Result<usize> {
    if !(l < m && m <= n) || m == 0 {
        return Err(Error::InvalidWindowParams(format!(
            "need 0 <= overlap < window <= n, got n={n} window={m} overlap={l}"
        )));
    }
    Ok((n - l) / (m - l))
}

/// Depth-by-wavenumber STFT magnitude.
#[derive(Debug, Clone)]
pub struct TfaMap {
    /// `[row, column]`: rows are depth bins, columns evaluated wavenumbers.
    pub energy: Array2<f64>,
    pub k_centers: Vec<f64>,
    /// STFT bin index of each row (DC rows already removed).
    pub depth_bins: Vec<f64>,
    /// Meters per STFT depth bin.
    pub depth_per_bin: f64,
}

impl TfaMap {
    pub fn rows(&self) -> usize {
        self.energy.nrows()
    }

    pub fn cols(&self) -> usize {
        self.energy.ncols()
    }

    pub fn depth_m(&self, row: usize) -> f64 {
        self.depth_bins[row] * self.depth_per_bin
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Ridge {
    /// Row index of the column maximum.
    pub depth_at_k: Vec<usize>,
    pub validity_mask: Vec<bool>,
}

impl Ridge {
    pub fn valid_count(&self) -> usize {
        self.validity_mask.iter().filter(|&&v| v).count()
    }

    pub fn coverage(&self) -> f64 {
        if self.validity_mask.is_empty() {
            0.0
        } else {
            self.valid_count() as f64 / self.validity_mask.len() as f64
        }
    }
}

/// Pre-planned STFT for records of one length.
pub struct StftPlan {
    cfg: StftConfig,
    n: usize,
    columns: usize,
    window: Vec<f64>,
    fft: Arc<dyn Fft<f64>>,
}

impl std::fmt::Debug for StftPlan {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("StftPlan")
            .field("cfg", &self.cfg)
            .field("n", &self.n)
            .field("columns", &self.columns)
            .finish()
    }
}

impl StftPlan {
    pub fn new(cfg: StftConfig, n: usize) -> Result<Self> {
        cfg.validate(n)?;
        Ok(Self {
            columns: k_eval_count(n, cfg.window_len, cfg.overlap_len)?,
            window: cfg.window.coefficients(cfg.window_len),
            fft: fft::forward(cfg.fft_len),
            cfg,
            n,
        })
    }

    pub fn config(&self) -> &StftConfig {
        &self.cfg
    }

    pub fn columns(&self) -> usize {
        self.columns
    }

    /// Sample index at the center of column `j`'s window.
    pub fn center_index(&self, j: usize) -> usize {
        j * self.cfg.hop() + self.cfg.window_len / 2
    }

    pub fn compute(&self, samples: &[f64], grid: &KGrid) -> Result<TfaMap> {
        if samples.len() != self.n || grid.len() != self.n {
            return Err(Error::LengthMismatch { expected: self.n, actual: samples.len() });
        }
        let cfg = &self.cfg;
        let rows = cfg.rows();
        let first = cfg.dc_exclusion_rows;
        let columns: Vec<Vec<f64>> = (0..self.columns)
            .into_par_iter()
            .map(|j| {
                let start = j * cfg.hop();
                let mut buf = vec![num_complex::Complex64::new(0.0, 0.0); cfg.fft_len];
                for ((b, &s), &w) in buf.iter_mut().zip(&samples[start..start + cfg.window_len]).zip(&self.window) {
                    b.re = s * w;
                }
                self.fft.process(&mut buf);
                buf[first..first + rows].iter().map(|z| z.norm()).collect()
            })
            .collect();

        let mut energy = Array2::<f64>::zeros((rows, self.columns));
        for (j, col) in columns.iter().enumerate() {
            for (r, &v) in col.iter().enumerate() {
                energy[[r, j]] = v;
            }
        }
        let k = grid.wavenumbers();
        Ok(TfaMap {
            energy,
            k_centers: (0..self.columns).map(|j| k[self.center_index(j)]).collect(),
            depth_bins: (0..rows).map(|r| (r + first) as f64).collect(),
            depth_per_bin: grid.depth_per_bin(cfg.fft_len),
        })
    }
}

pub fn stft(fringe: &SpectralFringe, cfg: &StftConfig) -> Result<TfaMap> {
    if fringe.stage() < Stage::Resampled {
        return Err(Error::Stage {
            op: "stft",
            expected: "Resampled or Windowed",
            actual: fringe.stage(),
        });
    }
    if !fringe.grid().is_linear() {
        return Err(Error::NonLinearGrid);
    }
    StftPlan::new(*cfg, fringe.len())?.compute(fringe.samples(), fringe.grid())
}

fn median(values: &mut [f64]) -> f64 {
    let n = values.len();
    let mid = n / 2;
    let (_, &mut upper, _) = values.select_nth_unstable_by(mid, f64::total_cmp);
    if n % 2 == 1 {
        upper
    } else {
        let lower = values[..mid].iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        0.5 * (lower + upper)
    }
}

/// Column-wise argmax; ties go to the smaller row. A column is valid when its
/// peak exceeds `VALIDITY_RATIO` times the column median.
pub fn extract_ridge(map: &TfaMap) -> Result<Ridge> {
    if map.rows() == 0 || map.cols() == 0 {
        return Err(Error::EmptyMap);
    }
    let mut depth_at_k = Vec::with_capacity(map.cols());
    let mut validity_mask = Vec::with_capacity(map.cols());
    let mut scratch = Vec::with_capacity(map.rows());
    for col in map.energy.columns() {
        let mut best = 0;
        let mut peak = col[0];
        for (r, &v) in col.iter().enumerate().skip(1) {
            if v > peak {
                peak = v;
                best = r;
            }
        }
        scratch.clear();
        scratch.extend(col.iter().cloned());
        let med = median(&mut scratch);
        depth_at_k.push(best);
        validity_mask.push(peak > VALIDITY_RATIO * med);
    }
    Ok(Ridge { depth_at_k, validity_mask })
}

/// Sample variance (divisor `valid - 1`) of the ridge over valid columns,
/// in squared depth bins.
pub fn ridge_variance(ridge: &Ridge) -> Result<f64> {
    let valid: Vec<f64> = ridge
        .depth_at_k
        .iter()
        .zip(&ridge.validity_mask)
        .filter(|(_, &ok)| ok)
        .map(|(&d, _)| d as f64)
        .collect();
    if valid.len() < 2 {
        return Err(Error::TooFewValidColumns { valid: valid.len(), needed: 2 });
    }
    let mean = valid.iter().sum::<f64>() / valid.len() as f64;
    Ok(valid.iter().map(|d| (d - mean).powi(2)).sum::<f64>() / (valid.len() - 1) as f64)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn map_from(columns: &[Vec<f64>]) -> TfaMap {
        let rows = columns[0].len();
        let mut energy = Array2::zeros((rows, columns.len()));
        for (j, c) in columns.iter().enumerate() {
            for (r, v) in c.iter().enumerate() {
                energy[[r, j]] = *v;
            }
        }
        TfaMap {
            energy,
            k_centers: (0..columns.len()).map(|j| j as f64).collect(),
            depth_bins: (0..rows).map(|r| r as f64).collect(),
            depth_per_bin: 1.0,
        }
    }

    #[test]
    fn default_geometry_window_count() {
        assert_eq!(k_eval_count(2048, 1024, 1013).unwrap(), 94);
        assert_eq!(k_eval_count(2048, 1024, 0).unwrap(), 2);
        assert_eq!(k_eval_count(777, 777, 0).unwrap(), 1);
    }

    #[test]
    fn invalid_window_params() {
        assert!(k_eval_count(2048, 1024, 1024).is_err());
        assert!(k_eval_count(1000, 1024, 10).is_err());
        let cfg = StftConfig { dc_exclusion_rows: 512, ..StftConfig::default() };
        assert!(cfg.validate(2048).is_err());
    }

    #[test]
    fn scaled_geometry_keeps_94_columns() {
        for n in [2048usize, 4096, 8192, 16384] {
            let cfg = StftConfig::scaled_to(n);
            assert_eq!(k_eval_count(n, cfg.window_len, cfg.overlap_len).unwrap(), 94);
            assert_eq!(cfg.window_len, n / 2);
        }
    }

    #[test]
    fn single_cell_per_column() {
        let mut cols = vec![vec![0.0; 20]; 3];
        cols[0][4] = 1.0;
        cols[1][9] = 2.0;
        cols[2][0] = 5.0;
        let ridge = extract_ridge(&map_from(&cols)).unwrap();
        assert_eq!(ridge.depth_at_k, vec![4, 9, 0]);
        assert!(ridge.validity_mask.iter().all(|&v| v));
    }

    #[test]
    fn ties_go_to_smaller_row() {
        let mut col = vec![0.1; 20];
        col[7] = 3.0;
        col[12] = 3.0;
        let ridge = extract_ridge(&map_from(&[col])).unwrap();
        assert_eq!(ridge.depth_at_k, vec![7]);
    }

    #[test]
    fn flat_column_is_invalid() {
        let ridge = extract_ridge(&map_from(&[vec![1.0; 10], vec![0.0; 10]])).unwrap();
        assert_eq!(ridge.validity_mask, vec![false, false]);
        assert!(matches!(ridge_variance(&ridge), Err(Error::TooFewValidColumns { valid: 0, .. })));
    }

    #[test]
    fn variance_examples() {
        let r = Ridge { depth_at_k: vec![5, 5, 5, 5], validity_mask: vec![true; 4] };
        assert_eq!(ridge_variance(&r).unwrap(), 0.0);
        let r = Ridge { depth_at_k: vec![1, 2, 3], validity_mask: vec![true; 3] };
        assert_eq!(ridge_variance(&r).unwrap(), 1.0);
        let r = Ridge { depth_at_k: vec![1, 100, 3], validity_mask: vec![true, false, true] };
        assert_eq!(ridge_variance(&r).unwrap(), 2.0);
    }

    #[test]
    fn empty_map_is_rejected() {
        let map = TfaMap {
            energy: Array2::zeros((0, 0)),
            k_centers: vec![],
            depth_bins: vec![],
            depth_per_bin: 1.0,
        };
        assert!(matches!(extract_ridge(&map), Err(Error::EmptyMap)));
    }

    #[test]
    fn median_even_and_odd() {
        assert_eq!(median(&mut [3.0, 1.0, 2.0]), 2.0);
        assert_eq!(median(&mut [4.0, 1.0, 3.0, 2.0]), 2.5);
    }
}
