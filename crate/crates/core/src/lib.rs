//! Spectral-domain OCT processing: k-linearization, time-frequency ridge
//! analysis, dispersion calibration, simulation and reconstruction.

pub mod error;
pub mod fft;
pub mod formats;
pub mod grid;
pub mod optimize;
pub mod recon;
pub mod signal;
pub mod sim;
pub mod spline;
pub mod tfa;
pub mod window;

pub use error::{Error, Result};
pub use grid::KGrid;
pub use optimize::{
    apply_correction, calibrate, objective, phase_correction, CalibrationResult, DispersionModel,
    OptimizerOptions, Order, PhaseCorrection, RidgeObjective,
};
pub use recon::{
    average_frames, measure_psf, reconstruct, repeatability_stats, resolution_vs_depth,
    sensitivity_rolloff, AScan, BScan, PsfMetrics, ReconOptions, RepeatStats,
};
pub use signal::{
    apply_window, normalize_to_reference, preprocess, resample_to_linear_k, subtract_background,
    to_analytic, ComplexFringe, ReferenceSpectrum, SpectralFringe, Stage,
};
pub use sim::{generate_fringe, transform_limited_fwhm, SimScenario, SourceSpec};
pub use tfa::{extract_ridge, k_eval_count, ridge_variance, stft, Ridge, StftConfig, TfaMap};
pub use window::WindowKind;
