//! A-scan and B-scan reconstruction plus PSF, roll-off, averaging and
//! repeatability metrology.

use ndarray::{Array2, Axis};
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fft;
use crate::optimize::{apply_correction, PhaseCorrection};
use crate::signal::{
    apply_window, normalize_to_reference, resample_to_linear_k, subtract_background, to_analytic,
    ReferenceSpectrum, SpectralFringe,
};
use crate::sim::{generate_fringe, SimScenario};
use crate::window::WindowKind;

/// Minimum peak-to-median magnitude ratio (20 dB) for a measurable PSF.
pub const DOMINANT_PEAK_RATIO: f64 = 10.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ReconOptions {
    pub window: WindowKind,
    /// Zero-padding factor of the depth FFT.
    pub pad_factor: usize,
}

impl Default for ReconOptions {
    fn default() -> Self {
        Self { window: WindowKind::Hann, pad_factor: 4 }
    }
}

/// Positive-depth half of the padded depth transform.
#[derive(Debug, Clone, PartialEq)]
pub struct AScan {
    pub complex: Vec<Complex64>,
    /// `20 log10(|c| / max |c|)`, floored at -400 dB.
    pub magnitude_db: Vec<f64>,
    /// m per bin
    pub depth_axis: f64,
}

impl AScan {
    pub fn from_complex(complex: Vec<Complex64>, depth_axis: f64) -> Self {
        let peak = complex.iter().map(|z| z.norm()).fold(0.0, f64::max);
        let magnitude_db = complex
            .iter()
            .map(|z| {
                if peak > 0.0 {
                    20.0 * (z.norm() / peak).max(1e-20).log10()
                } else {
                    0.0
                }
            })
            .collect();
        Self { complex, magnitude_db, depth_axis }
    }

    pub fn len(&self) -> usize {
        self.complex.len()
    }

    pub fn is_empty(&self) -> bool {
        self.complex.is_empty()
    }

    pub fn magnitude(&self) -> Vec<f64> {
        self.complex.iter().map(|z| z.norm()).collect()
    }

    pub fn depth_of(&self, bin: f64) -> f64 {
        bin * self.depth_axis
    }

    /// Same A-scan with every sample multiplied by `factor`.
    pub fn scaled(&self, factor: f64) -> Self {
        Self::from_complex(self.complex.iter().map(|z| z * factor).collect(), self.depth_axis)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PsfMetrics {
    /// Sample nearest to `peak_position`.
    pub peak_bin: usize,
    /// Fractional index; the centroid when the maximum is a flat run.
    pub peak_position: f64,
    /// m
    pub peak_depth: f64,
    /// m
    pub fwhm: f64,
    /// `20 log10(peak magnitude)`, reference level 1.
    pub peak_db: f64,
}

fn padded_depth_transform(analytic: &[Complex64], pad_factor: usize) -> Vec<Complex64> {
    let len = analytic.len() * pad_factor.max(1);
    let mut buf = vec![Complex64::new(0.0, 0.0); len];
    buf[..analytic.len()].copy_from_slice(analytic);
    fft::forward(len).process(&mut buf);
    buf.truncate(len / 2);
    buf
}

/// Background subtraction, normalization, resampling, windowing, analytic
/// transform, optional phase correction, padded FFT, positive half.
pub fn reconstruct(
    fringe: &SpectralFringe,
    reference: &ReferenceSpectrum,
    phase: Option<&PhaseCorrection>,
    opts: &ReconOptions,
) -> Result<AScan> {
    let f = subtract_background(fringe, reference)?;
    let f = normalize_to_reference(&f, reference)?;
    let f = resample_to_linear_k(&f)?;
    let f = apply_window(&f, opts.window)?;
    let mut analytic = to_analytic(&f)?;
    if let Some(p) = phase {
        analytic = apply_correction(&analytic, p)?;
    }
    let pad = opts.pad_factor.max(1);
    let depth_axis = f.grid().depth_per_bin(f.len() * pad);
    Ok(AScan::from_complex(padded_depth_transform(analytic.samples(), pad), depth_axis))
}

fn median_of(values: &[f64]) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

/// FWHM from linearly interpolated half-maximum crossings of the linear
/// magnitude on either side of the peak.
pub fn measure_psf(a: &AScan) -> Result<PsfMetrics> {
    let mag = a.magnitude();
    if mag.len() < 3 {
        return Err(Error::NoDominantPeak(format!("A-scan of {} samples", mag.len())));
    }
    let first = mag
        .iter()
        .enumerate()
        .fold(0, |best, (i, &v)| if v > mag[best] { i } else { best });
    let peak = mag[first];
    let median = median_of(&mag);
    if !(peak > 0.0) || peak < DOMINANT_PEAK_RATIO * median {
        return Err(Error::NoDominantPeak(format!(
            "peak {peak:.3e} is less than {DOMINANT_PEAK_RATIO}x the median {median:.3e}"
        )));
    }
    let mut last = first;
    while last + 1 < mag.len() && mag[last + 1] == peak {
        last += 1;
    }
    let half = 0.5 * peak;

    let mut i = first;
    while i > 0 && mag[i] >= half {
        i -= 1;
    }
    if mag[i] >= half {
        return Err(Error::NoDominantPeak("left half-maximum crossing outside the A-scan".into()));
    }
    let left = i as f64 + (half - mag[i]) / (mag[i + 1] - mag[i]);

    let mut j = last;
    while j + 1 < mag.len() && mag[j] >= half {
        j += 1;
    }
    if mag[j] >= half {
        return Err(Error::NoDominantPeak("right half-maximum crossing outside the A-scan".into()));
    }
    let right = j as f64 - (half - mag[j]) / (mag[j - 1] - mag[j]);

    let position = 0.5 * (first + last) as f64;
    let fwhm = (right - left) * a.depth_axis;
    if !(fwhm > 0.0) {
        return Err(Error::NoDominantPeak("degenerate half-maximum width".into()));
    }
    Ok(PsfMetrics {
        peak_bin: if first == last { first } else { (first + last) / 2 },
        peak_position: position,
        peak_depth: a.depth_of(position),
        fwhm,
        peak_db: 20.0 * peak.log10(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ResolutionRow {
    /// m, nominal depth of the first reflector
    pub depth: f64,
    /// m
    pub fwhm: f64,
    pub peak_depth: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RolloffRow {
    /// m
    pub depth: f64,
    /// dB relative to the shallowest depth
    pub peak_db: f64,
}

fn nominal_depth(s: &SimScenario) -> f64 {
    s.reflectors.reflectors[0].depth
}

fn measure_scenarios(
    scenarios: &[SimScenario],
    phase: Option<&PhaseCorrection>,
    seed: u64,
    opts: &ReconOptions,
) -> Result<Vec<PsfMetrics>> {
    scenarios
        .par_iter()
        .map(|s| {
            let (fringe, reference, _) = generate_fringe(s, seed)?;
            measure_psf(&reconstruct(&fringe, &reference, phase, opts)?)
        })
        .collect()
}

/// One row per scenario, in input order.
pub fn resolution_vs_depth(
    scenarios: &[SimScenario],
    phase: Option<&PhaseCorrection>,
    seed: u64,
    opts: &ReconOptions,
) -> Result<Vec<ResolutionRow>> {
    Ok(measure_scenarios(scenarios, phase, seed, opts)?
        .into_iter()
        .zip(scenarios)
        .map(|(m, s)| ResolutionRow { depth: nominal_depth(s), fwhm: m.fwhm, peak_depth: m.peak_depth })
        .collect())
}

/// One row per scenario, in input order, relative to the shallowest scenario.
pub fn sensitivity_rolloff(
    scenarios: &[SimScenario],
    phase: Option<&PhaseCorrection>,
    seed: u64,
    opts: &ReconOptions,
) -> Result<Vec<RolloffRow>> {
    let metrics = measure_scenarios(scenarios, phase, seed, opts)?;
    let shallowest = scenarios
        .iter()
        .enumerate()
        .min_by(|a, b| nominal_depth(a.1).abs().total_cmp(&nominal_depth(b.1).abs()))
        .map(|(i, _)| i)
        .ok_or(Error::TooFewValues { needed: 1, got: 0 })?;
    let reference = metrics[shallowest].peak_db;
    Ok(metrics
        .iter()
        .zip(scenarios)
        .map(|(m, s)| RolloffRow { depth: nominal_depth(s), peak_db: m.peak_db - reference })
        .collect())
}

/// Linear-magnitude image, one row per A-scan.
#[derive(Debug, Clone, PartialEq)]
pub struct BScan {
    /// `[ascan, depth bin]`
    pub image: Array2<f64>,
    /// m per depth bin
    pub depth_per_bin: f64,
    /// Number of frames averaged into this image.
    pub averaged: usize,
}

impl BScan {
    pub fn new(image: Array2<f64>, depth_per_bin: f64) -> Result<Self> {
        if let Some(index) = image.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFiniteInput { what: "B-scan", index });
        }
        Ok(Self { image, depth_per_bin, averaged: 1 })
    }

    pub fn from_ascans(ascans: &[AScan]) -> Result<Self> {
        let first = ascans.first().ok_or(Error::TooFewValues { needed: 1, got: 0 })?;
        let depth = first.len();
        let mut image = Array2::zeros((ascans.len(), depth));
        for (mut row, a) in image.axis_iter_mut(Axis(0)).zip(ascans) {
            if a.len() != depth {
                return Err(Error::DimensionMismatch {
                    expected: (ascans.len(), depth),
                    actual: (ascans.len(), a.len()),
                });
            }
            for (dst, z) in row.iter_mut().zip(&a.complex) {
                *dst = z.norm();
            }
        }
        Self::new(image, first.depth_axis)
    }

    pub fn ascans(&self) -> usize {
        self.image.nrows()
    }

    pub fn depth_bins(&self) -> usize {
        self.image.ncols()
    }
}

/// Reconstructs every fringe (in parallel) and stacks the magnitudes.
pub fn reconstruct_bscan(
    fringes: &[SpectralFringe],
    reference: &ReferenceSpectrum,
    phase: Option<&PhaseCorrection>,
    opts: &ReconOptions,
) -> Result<BScan> {
    let ascans: Vec<AScan> = fringes
        .par_iter()
        .map(|f| reconstruct(f, reference, phase, opts))
        .collect::<Result<_>>()?;
    BScan::from_ascans(&ascans)
}

/// Per-pixel mean of linear magnitudes. Values are summed in sorted order,
/// so the result does not depend on frame order.
pub fn average_frames(frames: &[BScan]) -> Result<BScan> {
    let first = frames.first().ok_or(Error::TooFewValues { needed: 1, got: 0 })?;
    let dim = first.image.dim();
    for f in frames {
        if f.image.dim() != dim {
            return Err(Error::DimensionMismatch { expected: dim, actual: f.image.dim() });
        }
    }
    let count = frames.len();
    let mut image = Array2::zeros(dim);
    let mut scratch = Vec::with_capacity(count);
    for ((r, c), dst) in image.indexed_iter_mut() {
        scratch.clear();
        scratch.extend(frames.iter().map(|f| f.image[[r, c]]));
        scratch.sort_by(f64::total_cmp);
        *dst = scratch.iter().sum::<f64>() / count as f64;
    }
    Ok(BScan {
        image,
        depth_per_bin: first.depth_per_bin,
        averaged: frames.iter().map(|f| f.averaged).sum(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RepeatStats {
    pub mean: f64,
    /// Sample standard deviation (divisor `n - 1`).
    pub stddev: f64,
    /// `stddev / mean`, signed; zero when `stddev` is zero.
    pub cv: f64,
}

pub fn repeatability_stats(values: &[f64]) -> Result<RepeatStats> {
    if values.len() < 2 {
        return Err(Error::TooFewValues { needed: 2, got: values.len() });
    }
    if let Some(index) = values.iter().position(|v| !v.is_finite()) {
        return Err(Error::NonFiniteInput { what: "repeatability values", index });
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let stddev = (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt();
    let cv = if stddev == 0.0 { 0.0 } else { stddev / mean };
    Ok(RepeatStats { mean, stddev, cv })
}
