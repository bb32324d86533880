use std::sync::Arc;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::model::{phase_correction, DispersionModel, PhaseCorrection};
use super::simplex::{nelder_mead, SimplexOptions};
use crate::error::{Error, Result};
use crate::grid::KGrid;
use crate::signal::{apply_window, to_analytic, SpectralFringe, Stage};
use crate::tfa::{extract_ridge, ridge_variance, Ridge, StftConfig, StftPlan};
use crate::window::WindowKind;

/// Which coefficients the simplex searches over.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Order {
    /// `a2` only; `a3` stays at its start value.
    #[default]
    Second,
    Third,
}

impl Order {
    pub fn from_number(n: u8) -> Option<Self> {
        match n {
            2 => Some(Order::Second),
            3 => Some(Order::Third),
            _ => None,
        }
    }

    pub fn number(self) -> u8 {
        match self {
            Order::Second => 2,
            Order::Third => 3,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct OptimizerOptions {
    pub order: Order,
    pub start: (f64, f64),
    /// Initial simplex offsets for `(a2, a3)`.
    pub step: (f64, f64),
    pub x_tol: f64,
    pub f_tol: f64,
    pub max_iterations: usize,
    pub stall_tol: f64,
    /// Minimum ridge coverage at the start point.
    pub min_coverage: f64,
    /// Whole-record window applied before the analytic transform.
    pub window: WindowKind,
}

impl Default for OptimizerOptions {
    fn default() -> Self {
        Self {
            order: Order::Second,
            start: (0.0, 0.0),
            step: (1e-12, 1e-18),
            x_tol: 1e-4,
            f_tol: 1e-4,
            max_iterations: 400,
            stall_tol: 1e-2,
            min_coverage: 0.5,
            window: WindowKind::Hann,
        }
    }
}

impl OptimizerOptions {
    fn simplex(&self) -> SimplexOptions {
        SimplexOptions {
            x_tol: self.x_tol,
            f_tol: self.f_tol,
            max_iterations: self.max_iterations,
            stall_tol: self.stall_tol,
        }
    }
}

#[derive(Debug, Clone)]
pub struct CalibrationResult {
    pub model: DispersionModel,
    pub phase: PhaseCorrection,
    pub objective_trace: Vec<(usize, f64)>,
    pub v_initial: f64,
    pub v_final: f64,
    pub evaluations: usize,
    pub iterations: usize,
    /// False when the iteration cap was hit with the simplex still wide.
    pub converged: bool,
    /// Ridge coverage at the returned point.
    pub coverage: f64,
}

/// Ridge-variance objective over `(a2, a3)` for one fringe. The windowed
/// analytic signal is computed once; each evaluation only rotates phases
/// and runs the STFT.
#[derive(Debug)]
pub struct RidgeObjective {
    analytic: Vec<Complex64>,
    offsets: Vec<f64>,
    grid: Arc<KGrid>,
    plan: StftPlan,
}

impl RidgeObjective {
    pub fn new(fringe: &SpectralFringe, cfg: &StftConfig) -> Result<Self> {
        Self::with_window(fringe, cfg, WindowKind::Hann)
    }

    /// A `Windowed` fringe is used as is; a `Resampled` one is windowed with `window`.
    pub fn with_window(fringe: &SpectralFringe, cfg: &StftConfig, window: WindowKind) -> Result<Self> {
        let windowed = match fringe.stage() {
            Stage::Resampled => apply_window(fringe, window)?,
            Stage::Windowed => fringe.clone(),
            actual => {
                return Err(Error::Stage {
                    op: "objective",
                    expected: "Resampled or Windowed",
                    actual,
                })
            }
        };
        let plan = StftPlan::new(*cfg, fringe.len())?;
        let analytic = to_analytic(&windowed)?;
        let grid = fringe.grid().clone();
        let k0 = grid.k0();
        Ok(Self {
            analytic: analytic.samples().to_vec(),
            offsets: grid.wavenumbers().iter().map(|k| k - k0).collect(),
            grid,
            plan,
        })
    }

    pub fn k0(&self) -> f64 {
        self.grid.k0()
    }

    pub fn grid(&self) -> &Arc<KGrid> {
        &self.grid
    }

    /// Real part of the analytic signal after correction by `(a2, a3)`.
    pub fn corrected_real(&self, a2: f64, a3: f64) -> Vec<f64> {
        self.analytic
            .iter()
            .zip(&self.offsets)
            .map(|(z, &q)| {
                let phase = -a2 * q * q - a3 * q * q * q;
                if phase == 0.0 {
                    z.re
                } else {
                    let (s, c) = phase.sin_cos();
                    z.re * c + z.im * s
                }
            })
            .collect()
    }

    pub fn ridge(&self, a2: f64, a3: f64) -> Result<Ridge> {
        let map = self.plan.compute(&self.corrected_real(a2, a3), &self.grid)?;
        extract_ridge(&map)
    }

    pub fn value(&self, a2: f64, a3: f64) -> Result<f64> {
        ridge_variance(&self.ridge(a2, a3)?)
    }
}

pub fn objective(fringe: &SpectralFringe, cfg: &StftConfig, a2: f64, a3: f64) -> Result<f64> {
    RidgeObjective::new(fringe, cfg)?.value(a2, a3)
}

pub fn calibrate(fringe: &SpectralFringe, cfg: &StftConfig, opts: &OptimizerOptions) -> Result<CalibrationResult> {
    let obj = RidgeObjective::with_window(fringe, cfg, opts.window)?;
    let (a2_0, a3_0) = opts.start;

    let start_ridge = obj.ridge(a2_0, a3_0)?;
    if start_ridge.coverage() < opts.min_coverage {
        return Err(Error::NoDominantPeak(format!(
            "ridge coverage {:.1}% at the start point is below {:.1}%",
            100.0 * start_ridge.coverage(),
            100.0 * opts.min_coverage
        )));
    }
    let v_initial = ridge_variance(&start_ridge)?;

    let eval = |a2: f64, a3: f64| obj.value(a2, a3).unwrap_or(f64::INFINITY);
    let simplex_opts = opts.simplex();
    let outcome = match opts.order {
        Order::Second => nelder_mead(|p| eval(p[0], a3_0), &[a2_0], &[opts.step.0], &simplex_opts),
        Order::Third => nelder_mead(
            |p| eval(p[0], p[1]),
            &[a2_0, a3_0],
            &[opts.step.0, opts.step.1],
            &simplex_opts,
        ),
    };
    let a2 = outcome.x[0];
    let a3 = outcome.x.get(1).copied().unwrap_or(a3_0);

    let model = DispersionModel::new(a2, a3, obj.k0())?;
    let phase = phase_correction(&model, obj.grid())?;
    let coverage = obj.ridge(a2, a3)?.coverage();
    Ok(CalibrationResult {
        model,
        phase,
        converged: outcome.converged(&simplex_opts),
        objective_trace: outcome.trace,
        v_initial,
        v_final: outcome.f,
        evaluations: outcome.evaluations + 2,
        iterations: outcome.iterations,
        coverage,
    })
}
