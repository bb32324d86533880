//! Forward model of a spectral-domain interferogram with injected dispersion,
//! optional k-grid warp, DC term, pixel-integration roll-off and white noise.

use std::f64::consts::{LN_2, PI};
use std::sync::Arc;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::KGrid;
use crate::optimize::DispersionModel;
use crate::signal::{ReferenceSpectrum, SpectralFringe, Stage, MIN_SAMPLES};

/// Second-order coefficient used throughout the calibration examples (m^2/rad).
pub const DEFAULT_INJECTED_A2: f64 = -4.118e-11;
/// Record length of the calibration system.
pub const CALIBRATION_N: usize = 2048;
/// Record length of the extended-range system used for depth sweeps.
pub const EXTENDED_N: usize = 16384;
/// Sampled wavenumber span shared by both systems (rad/m).
pub const DEFAULT_K_SPAN: f64 = 5.0e6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SpectralShape {
    #[default]
    Gaussian,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SourceSpec {
    /// m
    pub center_wavelength: f64,
    /// Full width at half maximum of the power spectrum (m).
    pub bandwidth_fwhm: f64,
    pub shape: SpectralShape,
}

impl Default for SourceSpec {
    fn default() -> Self {
        Self {
            center_wavelength: 850e-9,
            bandwidth_fwhm: 165e-9,
            shape: SpectralShape::Gaussian,
        }
    }
}

impl SourceSpec {
    pub fn validate(&self) -> Result<()> {
        let (l, b) = (self.center_wavelength, self.bandwidth_fwhm);
        if !(l.is_finite() && b.is_finite() && l > 0.0 && b > 0.0 && b < l) {
            return Err(Error::InvalidScenario(format!(
                "source needs 0 < bandwidth < center wavelength (got {b} m, {l} m)"
            )));
        }
        Ok(())
    }

    /// Wavenumbers of the two half-power wavelengths, `(low, high)`.
    pub fn k_edges(&self) -> (f64, f64) {
        let half = 0.5 * self.bandwidth_fwhm;
        (
            2.0 * PI / (self.center_wavelength + half),
            2.0 * PI / (self.center_wavelength - half),
        )
    }

    /// Midpoint of the half-power edges in k.
    pub fn k_center(&self) -> f64 {
        let (lo, hi) = self.k_edges();
        0.5 * (lo + hi)
    }

    /// Half-power width in k, converted from wavelength without linearization.
    pub fn k_fwhm(&self) -> f64 {
        let (lo, hi) = self.k_edges();
        hi - lo
    }

    /// Power spectrum, unit peak.
    pub fn power(&self, k: f64) -> f64 {
        let q = (k - self.k_center()) / self.k_fwhm();
        (-4.0 * LN_2 * q * q).exp()
    }
}

/// `(2 ln 2 / pi) * lambda0^2 / dlambda`.
pub fn transform_limited_fwhm(source: &SourceSpec) -> f64 {
    2.0 * LN_2 / PI * source.center_wavelength.powi(2) / source.bandwidth_fwhm
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Reflector {
    /// m from zero delay
    pub depth: f64,
    pub reflectivity: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReflectorSet {
    pub reference_reflectivity: f64,
    pub reflectors: Vec<Reflector>,
}

impl ReflectorSet {
    pub fn mirror(depth: f64) -> Self {
        Self {
            reference_reflectivity: 1.0,
            reflectors: vec![Reflector { depth, reflectivity: 1.0 }],
        }
    }

    fn validate(&self, max_depth: f64) -> Result<()> {
        let r = self.reference_reflectivity;
        if !(r > 0.0 && r <= 1.0) {
            return Err(Error::InvalidScenario(format!("reference reflectivity {r} outside (0, 1]")));
        }
        if self.reflectors.is_empty() {
            return Err(Error::InvalidScenario("no sample reflectors".into()));
        }
        for (i, a) in self.reflectors.iter().enumerate() {
            if !(a.reflectivity >= 0.0 && a.reflectivity <= 1.0) {
                return Err(Error::InvalidScenario(format!(
                    "reflectivity {} of reflector {i} outside [0, 1]",
                    a.reflectivity
                )));
            }
            if !a.depth.is_finite() || a.depth.abs() >= max_depth {
                return Err(Error::DepthOutOfRange { depth: a.depth, limit: max_depth });
            }
            if self.reflectors[..i].iter().any(|b| b.depth == a.depth) {
                return Err(Error::InvalidScenario(format!("duplicate reflector depth {}", a.depth)));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum GridWarp {
    #[default]
    None,
    /// `k = k_start + (k_end - k_start) * (p + strength * p * (1 - p))`,
    /// `p = i / (n - 1)`; requires `|strength| < 1`.
    Quadratic { strength: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Spectrometer {
    pub n: usize,
    /// Sampled bandwidth `N * dk` (rad/m).
    pub k_span: f64,
    /// Center of the sampled band; the source center when absent.
    pub k_center: Option<f64>,
    pub warp: GridWarp,
}

impl Default for Spectrometer {
    fn default() -> Self {
        Self {
            n: CALIBRATION_N,
            k_span: DEFAULT_K_SPAN,
            k_center: None,
            warp: GridWarp::None,
        }
    }
}

impl Spectrometer {
    pub fn dk(&self) -> f64 {
        self.k_span / self.n as f64
    }

    fn start(&self, source: &SourceSpec) -> f64 {
        self.k_center.unwrap_or_else(|| source.k_center()) - 0.5 * self.k_span
    }

    /// Uniform grid `k_c - span/2 + i * dk`; its `k[N/2]` is the band center.
    pub fn linear_grid(&self, source: &SourceSpec) -> Result<KGrid> {
        KGrid::linear(self.start(source), self.dk(), self.n)
    }

    /// Detector grid after the warp; endpoints coincide with the linear grid.
    pub fn detector_grid(&self, source: &SourceSpec) -> Result<KGrid> {
        match self.warp {
            GridWarp::None => self.linear_grid(source),
            GridWarp::Quadratic { strength } => {
                let start = self.start(source);
                let extent = (self.n - 1) as f64 * self.dk();
                let last = (self.n - 1) as f64;
                KGrid::new(
                    (0..self.n)
                        .map(|i| {
                            let p = i as f64 / last;
                            start + extent * (p + strength * p * (1.0 - p))
                        })
                        .collect(),
                )
            }
        }
    }

    /// `pi / (2 dk)`
    pub fn max_depth(&self) -> f64 {
        PI / (2.0 * self.dk())
    }

    fn validate(&self, source: &SourceSpec) -> Result<()> {
        if self.n < MIN_SAMPLES {
            return Err(Error::TooShort { n: self.n, min: MIN_SAMPLES });
        }
        if !(self.k_span.is_finite() && self.k_span > 0.0) {
            return Err(Error::InvalidScenario(format!("k_span {} must be positive", self.k_span)));
        }
        if self.start(source) <= 0.0 {
            return Err(Error::InvalidScenario("sampled band extends to k <= 0".into()));
        }
        if let GridWarp::Quadratic { strength } = self.warp {
            if !(strength.abs() < 1.0) {
                return Err(Error::InvalidScenario(format!(
                    "warp strength {strength} would make the grid non-monotone"
                )));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind", content = "value")]
pub enum NoiseSpec {
    #[default]
    None,
    /// Standard deviation in detector units.
    Sigma(f64),
    /// Ratio of the peak fringe envelope to the per-sample noise deviation, in dB.
    SnrDb(f64),
}

/// Dispersion injected into the sample arm; the expansion point is the
/// center of the linear grid.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(default)]
pub struct Injection {
    pub a2: f64,
    pub a3: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SimScenario {
    pub source: SourceSpec,
    pub spectrometer: Spectrometer,
    pub reflectors: ReflectorSet,
    pub injected: Injection,
    pub noise: NoiseSpec,
    pub dc_background: bool,
    /// Multiplies each reflector term by `sin(z dk) / (z dk)`.
    pub pixel_integration: bool,
}

impl Default for SimScenario {
    fn default() -> Self {
        Self::calibration(200e-6, DEFAULT_INJECTED_A2)
    }
}

impl SimScenario {
    /// Mirror on the calibration system: 2048 samples over 5e6 rad/m.
    pub fn calibration(depth: f64, a2: f64) -> Self {
        Self {
            source: SourceSpec::default(),
            spectrometer: Spectrometer::default(),
            reflectors: ReflectorSet::mirror(depth),
            injected: Injection { a2, a3: 0.0 },
            noise: NoiseSpec::None,
            dc_background: true,
            pixel_integration: false,
        }
    }

    /// Mirror on the extended-range system: same band, 16384 samples.
    pub fn extended(depth: f64, a2: f64) -> Self {
        let mut s = Self::calibration(depth, a2);
        s.spectrometer.n = EXTENDED_N;
        s
    }

    pub fn with_noise(mut self, noise: NoiseSpec) -> Self {
        self.noise = noise;
        self
    }

    pub fn validate(&self) -> Result<()> {
        self.source.validate()?;
        self.spectrometer.validate(&self.source)?;
        self.reflectors.validate(self.spectrometer.max_depth())?;
        if !(self.injected.a2.is_finite() && self.injected.a3.is_finite()) {
            return Err(Error::InvalidScenario("injected coefficients must be finite".into()));
        }
        match self.noise {
            NoiseSpec::Sigma(s) if !(s >= 0.0 && s.is_finite()) => {
                Err(Error::InvalidScenario(format!("noise sigma {s} must be finite and >= 0")))
            }
            NoiseSpec::SnrDb(db) if !db.is_finite() => {
                Err(Error::InvalidScenario("SNR must be finite".into()))
            }
            _ => Ok(()),
        }
    }

    /// Injected model expanded about the linear grid center.
    pub fn injected_model(&self) -> Result<DispersionModel> {
        let grid = self.spectrometer.linear_grid(&self.source)?;
        DispersionModel::new(self.injected.a2, self.injected.a3, grid.k0())
    }

    /// Peak of `S(k) * sum sqrt(R_R R_n)` over the band.
    pub fn fringe_envelope_peak(&self) -> f64 {
        let rr = self.reflectors.reference_reflectivity;
        self.reflectors
            .reflectors
            .iter()
            .map(|r| (rr * r.reflectivity).sqrt())
            .sum()
    }

    pub fn noise_sigma(&self) -> f64 {
        match self.noise {
            NoiseSpec::None => 0.0,
            NoiseSpec::Sigma(s) => s,
            NoiseSpec::SnrDb(db) => self.fringe_envelope_peak() * 10f64.powf(-db / 20.0),
        }
    }
}

fn sinc(x: f64) -> f64 {
    if x == 0.0 {
        1.0
    } else {
        x.sin() / x
    }
}

/// Raw detector fringe, its reference spectrum and the detector grid.
/// Identical `(scenario, seed)` pairs give bit-identical output.
pub fn generate_fringe(s: &SimScenario, seed: u64) -> Result<(SpectralFringe, ReferenceSpectrum, Arc<KGrid>)> {
    s.validate()?;
    let grid = Arc::new(s.spectrometer.detector_grid(&s.source)?);
    let model = s.injected_model()?;
    let dk = s.spectrometer.dk();
    let rr = s.reflectors.reference_reflectivity;
    let total_r = rr + s.reflectors.reflectors.iter().map(|r| r.reflectivity).sum::<f64>();
    let terms: Vec<(f64, f64)> = s
        .reflectors
        .reflectors
        .iter()
        .map(|r| {
            let roll = if s.pixel_integration { sinc(r.depth * dk) } else { 1.0 };
            (r.depth, (rr * r.reflectivity).sqrt() * roll)
        })
        .collect();

    let power: Vec<f64> = grid.wavenumbers().iter().map(|&k| s.source.power(k)).collect();
    let background: Vec<f64> = if s.dc_background {
        power.iter().map(|p| 0.5 * p * total_r).collect()
    } else {
        vec![0.0; grid.len()]
    };

    let mut samples: Vec<f64> = grid
        .wavenumbers()
        .iter()
        .zip(&power)
        .zip(&background)
        .map(|((&k, &p), &b)| {
            let dphi = model.phase_at(k);
            let ac: f64 = terms.iter().map(|&(z, amp)| amp * (2.0 * k * z + dphi).cos()).sum();
            p * ac + b
        })
        .collect();

    let sigma = s.noise_sigma();
    if sigma > 0.0 {
        let normal = Normal::new(0.0, sigma)
            .map_err(|e| Error::InvalidScenario(format!("noise distribution: {e}")))?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for v in &mut samples {
            *v += normal.sample(&mut rng);
        }
    }

    let fringe = SpectralFringe::new(samples, grid.clone(), Stage::Raw)?;
    let reference = ReferenceSpectrum::new(background, power)?;
    Ok((fringe, reference, grid))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn transform_limit_examples() {
        let s = SourceSpec::default();
        let v = transform_limited_fwhm(&s);
        assert!((v - 1.9322e-6).abs() < 1e-9, "{v}");
        let wide = SourceSpec { bandwidth_fwhm: 330e-9, ..s };
        assert!((transform_limited_fwhm(&wide) - v / 2.0).abs() < 1e-15);
        let red = SourceSpec { center_wavelength: 1700e-9, ..s };
        assert!((transform_limited_fwhm(&red) - 4.0 * v).abs() < 1e-15);
    }

    #[test]
    fn k_conversion_is_exact() {
        let s = SourceSpec::default();
        let expect = 2.0 * PI * (1.0 / 767.5e-9 - 1.0 / 932.5e-9);
        assert!((s.k_fwhm() - expect).abs() < 1e-6);
        assert!((s.power(s.k_edges().0) - 0.5).abs() < 1e-12);
        assert!((s.power(s.k_edges().1) - 0.5).abs() < 1e-12);
    }

    #[test]
    fn invalid_source() {
        let s = SourceSpec { bandwidth_fwhm: 900e-9, ..Default::default() };
        assert!(s.validate().is_err());
    }

    #[test]
    fn depth_out_of_range() {
        let s = SimScenario::calibration(1e-3, 0.0);
        assert!(matches!(generate_fringe(&s, 0), Err(Error::DepthOutOfRange { .. })));
    }

    #[test]
    fn zero_reflectivity_gives_background() {
        let mut s = SimScenario::calibration(200e-6, 0.0);
        s.reflectors.reflectors[0].reflectivity = 0.0;
        let (f, r, _) = generate_fringe(&s, 1).unwrap();
        assert_eq!(f.samples(), &r.background[..]);
    }

    #[test]
    fn warped_grid_keeps_endpoints() {
        let mut sp = Spectrometer::default();
        let src = SourceSpec::default();
        let lin = sp.linear_grid(&src).unwrap();
        sp.warp = GridWarp::Quadratic { strength: 0.2 };
        let warped = sp.detector_grid(&src).unwrap();
        assert!(!warped.is_linear());
        assert!((warped.k_min() - lin.k_min()).abs() < 1e-6);
        assert!((warped.k_max() - lin.k_max()).abs() < 1e-6);
    }

    #[test]
    fn snr_sets_sigma() {
        let s = SimScenario::calibration(200e-6, 0.0).with_noise(NoiseSpec::SnrDb(40.0));
        assert!((s.noise_sigma() - 0.01).abs() < 1e-15);
    }

    #[test]
    fn scenario_json_round_trip() {
        let s = SimScenario::extended(1e-3, DEFAULT_INJECTED_A2).with_noise(NoiseSpec::Sigma(0.1));
        let text = serde_json::to_string(&s).unwrap();
        let back: SimScenario = serde_json::from_str(&text).unwrap();
        assert_eq!(s, back);
    }
}
