mod common;

use common::{naive_dft_magnitude, resampled};
use octdisp_core::fft::real_spectrum;
use octdisp_core::sim::*;
use octdisp_core::*;
use proptest::prelude::*;

fn bits(v: &[f64]) -> Vec<u64> {
    v.iter().map(|x| x.to_bits()).collect()
}

#[test]
fn single_reflector_peaks_at_the_predicted_bin() {
    for depth in [120e-6, 200e-6, 333e-6, 480e-6] {
        let s = SimScenario::calibration(depth, 0.0);
        let f = resampled(&s, 0);
        let n = f.len();
        let expected = depth * n as f64 * f.grid().spacing() / std::f64::consts::PI;
        let mags: Vec<f64> = (0..n / 2).map(|m| naive_dft_magnitude(f.samples(), m)).collect();
        let argmax = mags.iter().enumerate().max_by(|a, b| a.1.total_cmp(b.1)).unwrap().0;
        assert_eq!(argmax, expected.round() as usize, "depth {depth}: oracle bin {expected:.3}");
    }
}

#[test]
fn uncompensated_dispersion_broadens_beyond_three_transform_limits() {
    let s = SimScenario::calibration(200e-6, DEFAULT_INJECTED_A2);
    let (f, r, _) = generate_fringe(&s, 0).unwrap();
    let m = measure_psf(&reconstruct(&f, &r, None, &ReconOptions::default()).unwrap()).unwrap();
    assert!(m.fwhm / transform_limited_fwhm(&s.source) > 3.0, "{}", m.fwhm);
}

#[test]
fn noise_has_the_requested_deviation() {
    let mut s = SimScenario::calibration(200e-6, 0.0).with_noise(NoiseSpec::Sigma(0.3));
    s.dc_background = false;
    s.reflectors.reflectors[0].reflectivity = 0.0;
    let (f, _, _) = generate_fringe(&s, 11).unwrap();
    let n = f.len() as f64;
    let mean = f.samples().iter().sum::<f64>() / n;
    let sd = (f.samples().iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt();
    assert!((sd / 0.3 - 1.0).abs() < 0.06, "{sd}");
}

#[test]
fn pixel_integration_attenuates_by_sinc() {
    let mut s = SimScenario::calibration(400e-6, 0.0);
    s.dc_background = false;
    let (plain, _, _) = generate_fringe(&s, 0).unwrap();
    s.pixel_integration = true;
    let (rolled, _, _) = generate_fringe(&s, 0).unwrap();
    let x = 400e-6 * s.spectrometer.dk();
    let factor = x.sin() / x;
    for (a, b) in rolled.samples().iter().zip(plain.samples()) {
        assert!((a - factor * b).abs() <= 1e-12 * b.abs().max(1e-12));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn generation_is_deterministic(depth in 50e-6f64..600e-6, a2 in -8e-11f64..8e-11, seed in any::<u64>()) {
        let s = SimScenario::calibration(depth, a2).with_noise(NoiseSpec::SnrDb(40.0));
        let (a, ra, ga) = generate_fringe(&s, seed).unwrap();
        let (b, rb, gb) = generate_fringe(&s, seed).unwrap();
        prop_assert_eq!(bits(a.samples()), bits(b.samples()));
        prop_assert_eq!(ra, rb);
        prop_assert!(ga.same_as(&gb));
    }

    #[test]
    fn fringes_are_linear_in_reflectors(
        z1 in 30e-6f64..600e-6,
        z2 in 30e-6f64..600e-6,
        r1 in 0.01f64..1.0,
        r2 in 0.01f64..1.0,
        a2 in -8e-11f64..8e-11,
    ) {
        prop_assume!((z1 - z2).abs() > 1e-9);
        let base = |reflectors: Vec<Reflector>| {
            let mut s = SimScenario::calibration(z1, a2);
            s.dc_background = false;
            s.reflectors.reflectors = reflectors;
            generate_fringe(&s, 0).unwrap().0
        };
        let one = base(vec![Reflector { depth: z1, reflectivity: r1 }]);
        let two = base(vec![Reflector { depth: z2, reflectivity: r2 }]);
        let both = base(vec![Reflector { depth: z1, reflectivity: r1 }, Reflector { depth: z2, reflectivity: r2 }]);
        for ((a, b), c) in one.samples().iter().zip(two.samples()).zip(both.samples()) {
            prop_assert!((a + b - c).abs() <= 1e-12);
        }
    }

    #[test]
    fn parseval_holds(depth in 30e-6f64..600e-6, a2 in -8e-11f64..8e-11, seed in 0u64..1000) {
        let s = SimScenario::calibration(depth, a2).with_noise(NoiseSpec::SnrDb(30.0));
        let (f, _, _) = generate_fringe(&s, seed).unwrap();
        let time: f64 = f.samples().iter().map(|v| v * v).sum();
        let freq: f64 = real_spectrum(f.samples(), f.len()).iter().map(|z| z.norm_sqr()).sum::<f64>() / f.len() as f64;
        prop_assert!((time - freq).abs() <= 1e-9 * time);
    }

    #[test]
    fn out_of_range_depths_are_rejected(excess in 1.0f64..3.0) {
        let s = SimScenario::calibration(0.0, 0.0);
        let limit = s.spectrometer.max_depth();
        let bad = SimScenario::calibration(limit * excess, 0.0);
        let rejected = matches!(generate_fringe(&bad, 0), Err(Error::DepthOutOfRange { .. }));
        prop_assert!(rejected);
    }
}
