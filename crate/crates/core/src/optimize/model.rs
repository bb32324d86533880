use std::sync::Arc;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::KGrid;
use crate::signal::ComplexFringe;

/// Second- and third-order coefficients of the phase expansion about `k0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DispersionModel {
    /// m^2/rad
    pub a2: f64,
    /// m^3/rad^2
    pub a3: f64,
    /// rad/m
    pub k0: f64,
}

impl DispersionModel {
    pub fn new(a2: f64, a3: f64, k0: f64) -> Result<Self> {
        if !(a2.is_finite() && a3.is_finite() && k0.is_finite() && k0 > 0.0) {
            return Err(Error::InvalidScenario(format!(
                "dispersion model needs finite coefficients and k0 > 0 (a2={a2}, a3={a3}, k0={k0})"
            )));
        }
        Ok(Self { a2, a3, k0 })
    }

    pub fn zero(k0: f64) -> Self {
        Self { a2: 0.0, a3: 0.0, k0 }
    }

    /// `-a2 (k - k0)^2 - a3 (k - k0)^3`
    pub fn phase_at(&self, k: f64) -> f64 {
        let q = k - self.k0;
        -self.a2 * q * q - self.a3 * q * q * q
    }

    pub fn negated(&self) -> Self {
        Self { a2: -self.a2, a3: -self.a3, k0: self.k0 }
    }
}

/// Per-sample phase vector on a linear grid.
#[derive(Debug, Clone)]
pub struct PhaseCorrection {
    pub dphi: Vec<f64>,
    pub grid: Arc<KGrid>,
}

impl PhaseCorrection {
    pub fn new(dphi: Vec<f64>, grid: Arc<KGrid>) -> Result<Self> {
        if dphi.len() != grid.len() {
            return Err(Error::LengthMismatch { expected: grid.len(), actual: dphi.len() });
        }
        if let Some(index) = dphi.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFiniteInput { what: "phase vector", index });
        }
        Ok(Self { dphi, grid })
    }

    pub fn zero(grid: Arc<KGrid>) -> Self {
        Self { dphi: vec![0.0; grid.len()], grid }
    }

    pub fn negated(&self) -> Self {
        Self {
            dphi: self.dphi.iter().map(|v| -v).collect(),
            grid: self.grid.clone(),
        }
    }

    /// Sum of two corrections on the same grid.
    pub fn compose(&self, other: &PhaseCorrection) -> Result<Self> {
        if !self.grid.same_as(&other.grid) {
            return Err(Error::GridMismatch);
        }
        Ok(Self {
            dphi: self.dphi.iter().zip(&other.dphi).map(|(a, b)| a + b).collect(),
            grid: self.grid.clone(),
        })
    }
}

pub fn phase_correction(model: &DispersionModel, grid: &Arc<KGrid>) -> Result<PhaseCorrection> {
    if !grid.is_linear() {
        return Err(Error::NonLinearGrid);
    }
    let dphi = grid.wavenumbers().iter().map(|&k| model.phase_at(k)).collect();
    PhaseCorrection::new(dphi, grid.clone())
}

/// Multiplies each sample by `exp(-i * dphi)`. Samples with zero phase are
/// passed through untouched.
pub fn apply_correction(fringe: &ComplexFringe, phase: &PhaseCorrection) -> Result<ComplexFringe> {
    if fringe.len() != phase.dphi.len() {
        return Err(Error::LengthMismatch { expected: fringe.len(), actual: phase.dphi.len() });
    }
    if !fringe.grid().same_as(&phase.grid) {
        return Err(Error::GridMismatch);
    }
    let samples = fringe
        .samples()
        .iter()
        .zip(&phase.dphi)
        .map(|(&z, &p)| {
            if p == 0.0 {
                z
            } else {
                let (s, c) = p.sin_cos();
                z * Complex64::new(c, -s)
            }
        })
        .collect();
    Ok(ComplexFringe::from_parts_unchecked(samples, fringe.grid().clone()))
}
