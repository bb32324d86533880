//! Phase-correction model, ridge-variance objective and the simplex
//! calibration loop that fits the second/third-order coefficients.

mod calibrate;
mod model;
pub mod simplex;

pub use calibrate::{
    calibrate, objective, CalibrationResult, OptimizerOptions, Order, RidgeObjective,
};
pub use model::{apply_correction, phase_correction, DispersionModel, PhaseCorrection};
