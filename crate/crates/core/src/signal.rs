//! Spectral interferogram types and the preprocessing chain that runs before
//! the STFT or the depth transform.
//!
//! Every operation checks the [`Stage`] of its input and emits the next one,
//! so the chain can only be walked in order:
//! `Raw -> BackgroundSubtracted -> Normalized -> Resampled -> Windowed`.

use std::sync::Arc;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fft;
use crate::grid::{normalize_order, KGrid};
use crate::spline::NaturalSpline;
use crate::window::WindowKind;

/// Minimum record length accepted anywhere in the pipeline.
pub const MIN_SAMPLES: usize = 64;

/// Floor applied to the source power before division, relative to its maximum.
pub const REFERENCE_CLAMP: f64 = 1e-3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Stage {
    Raw,
    BackgroundSubtracted,
    Normalized,
    Resampled,
    Windowed,
}

impl Stage {
    pub const ALL: [Stage; 5] = [
        Stage::Raw,
        Stage::BackgroundSubtracted,
        Stage::Normalized,
        Stage::Resampled,
        Stage::Windowed,
    ];

    pub fn code(self) -> u8 {
        self as u8
    }

    pub fn from_code(code: u8) -> Option<Stage> {
        Stage::ALL.get(code as usize).copied()
    }
}

fn expect_stage(op: &'static str, expected: &'static str, actual: Stage, ok: bool) -> Result<()> {
    if ok {
        Ok(())
    } else {
        Err(Error::Stage { op, expected, actual })
    }
}

fn check_finite(what: &'static str, values: &[f64]) -> Result<()> {
    match values.iter().position(|v| !v.is_finite()) {
        Some(index) => Err(Error::NonFiniteInput { what, index }),
        None => Ok(()),
    }
}

/// One real-valued spectral interferogram tagged with its pipeline stage.
#[derive(Debug, Clone)]
pub struct SpectralFringe {
    samples: Vec<f64>,
    grid: Arc<KGrid>,
    stage: Stage,
}

impl SpectralFringe {
    pub fn new(samples: Vec<f64>, grid: Arc<KGrid>, stage: Stage) -> Result<Self> {
        if samples.len() < MIN_SAMPLES {
            return Err(Error::TooShort { n: samples.len(), min: MIN_SAMPLES });
        }
        if samples.len() != grid.len() {
            return Err(Error::LengthMismatch { expected: grid.len(), actual: samples.len() });
        }
        check_finite("fringe samples", &samples)?;
        Ok(Self { samples, grid, stage })
    }

    /// Builds a fringe from detector-ordered samples and wavenumbers; a
    /// decreasing wavenumber axis is flipped together with the samples.
    pub fn from_detector(mut samples: Vec<f64>, mut k: Vec<f64>, stage: Stage) -> Result<Self> {
        if samples.len() != k.len() {
            return Err(Error::LengthMismatch { expected: k.len(), actual: samples.len() });
        }
        normalize_order(&mut samples, &mut k);
        let grid = KGrid::new(k)?;
        Self::new(samples, Arc::new(grid), stage)
    }

    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    pub fn into_samples(self) -> Vec<f64> {
        self.samples
    }

    pub fn grid(&self) -> &Arc<KGrid> {
        &self.grid
    }

    pub fn stage(&self) -> Stage {
        self.stage
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    /// Same grid and stage, scaled samples.
    pub fn scaled(&self, factor: f64) -> Result<Self> {
        Self::new(
            self.samples.iter().map(|v| v * factor).collect(),
            self.grid.clone(),
            self.stage,
        )
    }
}

/// Background and source power spectrum measured without a sample.
#[derive(Debug, Clone, PartialEq)]
pub struct ReferenceSpectrum {
    pub background: Vec<f64>,
    pub source_power: Vec<f64>,
}

impl ReferenceSpectrum {
    pub fn new(background: Vec<f64>, source_power: Vec<f64>) -> Result<Self> {
        if background.len() != source_power.len() {
            return Err(Error::LengthMismatch {
                expected: background.len(),
                actual: source_power.len(),
            });
        }
        check_finite("background", &background)?;
        check_finite("source power", &source_power)?;
        Ok(Self { background, source_power })
    }

    pub fn len(&self) -> usize {
        self.background.len()
    }

    pub fn is_empty(&self) -> bool {
        self.background.is_empty()
    }

    /// Reference with zero background and unit source power.
    pub fn flat(n: usize) -> Self {
        Self {
            background: vec![0.0; n],
            source_power: vec![1.0; n],
        }
    }
}

/// Complex (analytic) spectral record on a linear grid.
#[derive(Debug, Clone)]
pub struct ComplexFringe {
    samples: Vec<Complex64>,
    grid: Arc<KGrid>,
}

impl ComplexFringe {
    pub fn new(samples: Vec<Complex64>, grid: Arc<KGrid>) -> Result<Self> {
        if samples.len() != grid.len() {
            return Err(Error::LengthMismatch { expected: grid.len(), actual: samples.len() });
        }
        if let Some(index) = samples.iter().position(|z| !z.norm().is_finite()) {
            return Err(Error::NonFiniteInput { what: "complex fringe", index });
        }
        Ok(Self { samples, grid })
    }

    pub fn samples(&self) -> &[Complex64] {
        &self.samples
    }

    pub fn grid(&self) -> &Arc<KGrid> {
        &self.grid
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn real_part(&self) -> Vec<f64> {
        self.samples.iter().map(|z| z.re).collect()
    }

    pub(crate) fn from_parts_unchecked(samples: Vec<Complex64>, grid: Arc<KGrid>) -> Self {
        Self { samples, grid }
    }
}

pub fn subtract_background(fringe: &SpectralFringe, reference: &ReferenceSpectrum) -> Result<SpectralFringe> {
    expect_stage("subtract_background", "Raw", fringe.stage, fringe.stage == Stage::Raw)?;
    if reference.len() != fringe.len() {
        return Err(Error::LengthMismatch { expected: fringe.len(), actual: reference.len() });
    }
    let samples = fringe
        .samples
        .iter()
        .zip(&reference.background)
        .map(|(s, b)| s - b)
        .collect();
    SpectralFringe::new(samples, fringe.grid.clone(), Stage::BackgroundSubtracted)
}

/// Divides by the source power, clamped from below at
/// `REFERENCE_CLAMP * max(source_power)`.
pub fn normalize_to_reference(fringe: &SpectralFringe, reference: &ReferenceSpectrum) -> Result<SpectralFringe> {
    expect_stage(
        "normalize_to_reference",
        "BackgroundSubtracted",
        fringe.stage,
        fringe.stage == Stage::BackgroundSubtracted,
    )?;
    if reference.len() != fringe.len() {
        return Err(Error::LengthMismatch { expected: fringe.len(), actual: reference.len() });
    }
    let peak = reference.source_power.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if !(peak > 0.0) {
        return Err(Error::DegenerateReference);
    }
    let floor = REFERENCE_CLAMP * peak;
    let samples = fringe
        .samples
        .iter()
        .zip(&reference.source_power)
        .map(|(s, p)| s / p.max(floor))
        .collect();
    SpectralFringe::new(samples, fringe.grid.clone(), Stage::Normalized)
}

/// Natural-cubic-spline interpolation onto the uniform grid spanning the same
/// wavenumber range. Already-linear input passes through unchanged.
pub fn resample_to_linear_k(fringe: &SpectralFringe) -> Result<SpectralFringe> {
    expect_stage("resample_to_linear_k", "Normalized", fringe.stage, fringe.stage == Stage::Normalized)?;
    if fringe.grid.is_linear() {
        return SpectralFringe::new(fringe.samples.clone(), fringe.grid.clone(), Stage::Resampled);
    }
    let linear = fringe.grid.linearized();
    let spline = NaturalSpline::new(fringe.grid.wavenumbers(), &fringe.samples)?;
    let samples = spline.eval_sorted(linear.wavenumbers());
    SpectralFringe::new(samples, Arc::new(linear), Stage::Resampled)
}

pub fn apply_window(fringe: &SpectralFringe, kind: WindowKind) -> Result<SpectralFringe> {
    expect_stage("apply_window", "Resampled", fringe.stage, fringe.stage == Stage::Resampled)?;
    let samples = match kind {
        WindowKind::Rectangular => fringe.samples.clone(),
        _ => fringe
            .samples
            .iter()
            .zip(kind.coefficients(fringe.len()))
            .map(|(s, w)| s * w)
            .collect(),
    };
    SpectralFringe::new(samples, fringe.grid.clone(), Stage::Windowed)
}

pub fn to_analytic(fringe: &SpectralFringe) -> Result<ComplexFringe> {
    expect_stage(
        "to_analytic",
        "Resampled or Windowed",
        fringe.stage,
        fringe.stage >= Stage::Resampled,
    )?;
    if !fringe.grid.is_linear() {
        return Err(Error::NonLinearGrid);
    }
    ComplexFringe::new(fft::analytic_signal(&fringe.samples), fringe.grid.clone())
}

/// Background subtraction, normalization and resampling in one call.
pub fn preprocess(fringe: &SpectralFringe, reference: &ReferenceSpectrum) -> Result<SpectralFringe> {
    let f = subtract_background(fringe, reference)?;
    let f = normalize_to_reference(&f, reference)?;
    resample_to_linear_k(&f)
}
