//! Self-contained regeneration of the calibration, resolution, time-frequency
//! and imaging results from the simulator, with a deterministic report.

use std::fmt::Write as _;
use std::path::Path;

use anyhow::{anyhow, Context, Result};
use octdisp_core::formats::CalibrationRecord;
use octdisp_core::recon::ResolutionRow;
use octdisp_core::sim::{
    generate_fringe, GridWarp, NoiseSpec, Reflector, DEFAULT_INJECTED_A2, EXTENDED_N,
};
use octdisp_core::{
    average_frames, calibrate, extract_ridge, preprocess, reconstruct, repeatability_stats,
    resolution_vs_depth, ridge_variance, sensitivity_rolloff, stft, transform_limited_fwhm, AScan,
    BScan, CalibrationResult, OptimizerOptions, ReconOptions, SimScenario, SpectralFringe,
    StftConfig,
};
use serde::Serialize;

use crate::cli::{parse_depths, ReproduceArgs, TfaStage};
use crate::commands::{resolution_csv, resolution_plot, rolloff_plot, stage_fringe, write_map, RolloffCsv};
use crate::io;
use crate::plot;
use crate::Status;

/// Calibration reflector depth.
pub const CALIBRATION_DEPTH: f64 = 200e-6;
/// Stored as `created_utc` so that the output directory is reproducible.
pub const PINNED_TIMESTAMP: &str = "1970-01-01T00:00:00Z";
pub const PHANTOM_ASCANS: usize = 96;
pub const PHANTOM_SNR_DB: f64 = 30.0;
pub const TFA_WARP: f64 = 0.1;

/// Independent simulator seed for item `index` of `stream`.
pub fn derive_seed(seed: u64, stream: u64, index: u64) -> u64 {
    seed.wrapping_mul(0x9E37_79B9_7F4A_7C15).wrapping_add(stream << 32).wrapping_add(index)
}

pub struct Check {
    pub name: &'static str,
    pub pass: bool,
    pub detail: String,
}

#[derive(Default)]
pub struct Report {
    pub body: String,
    pub checks: Vec<Check>,
}

impl Report {
    fn line(&mut self, text: impl AsRef<str>) {
        self.body.push_str(text.as_ref());
        self.body.push('\n');
    }

    fn check(&mut self, name: &'static str, pass: bool, detail: String) {
        self.checks.push(Check { name, pass, detail });
    }

    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }

    pub fn render(&self) -> String {
        let mut s = self.body.clone();
        s.push_str("\n[checks]\n");
        for c in &self.checks {
            let _ = writeln!(s, "{} {}: {}", if c.pass { "PASS" } else { "FAIL" }, c.name, c.detail);
        }
        let _ = writeln!(s, "overall {}", if self.passed() { "PASS" } else { "FAIL" });
        s
    }
}

fn prepared(s: &SimScenario, seed: u64) -> Result<SpectralFringe> {
    let (f, r, _) = generate_fringe(s, seed)?;
    Ok(preprocess(&f, &r)?)
}

#[derive(Serialize)]
struct RunRow {
    run: usize,
    seed: u64,
    a2: f64,
    a3: f64,
    v_initial: f64,
    v_final: f64,
    evaluations: usize,
    converged: bool,
}

fn run_row(run: usize, seed: u64, r: &CalibrationResult) -> RunRow {
    RunRow {
        run,
        seed,
        a2: r.model.a2,
        a3: r.model.a3,
        v_initial: r.v_initial,
        v_final: r.v_final,
        evaluations: r.evaluations,
        converged: r.converged,
    }
}

pub fn run(args: &ReproduceArgs, seed: u64) -> Result<Status> {
    let depths_mm = parse_depths(&args.depths).map_err(|e| anyhow!(e))?;
    let report = build(args, seed, &depths_mm)?;
    let text = report.render();
    io::write_atomic(&args.out_dir.join("report.txt"), text.as_bytes())?;
    print!("{text}");
    Ok(if report.passed() { Status::Ok } else { Status::Flagged })
}

fn build(args: &ReproduceArgs, seed: u64, depths_mm: &[f64]) -> Result<Report> {
    let dir = args.out_dir.as_path();
    let mut rep = Report::default();
    rep.line("octdisp reproduction report");
    rep.line(format!("seed {seed}"));
    rep.line(format!("injected a2 {DEFAULT_INJECTED_A2:e} m^2/rad"));

    let collapse = calibration_runs(args, seed, dir, &mut rep)?;
    let worst = collapse.iter().map(|(a, b)| b / a).fold(0.0, f64::max);
    rep.check(
        "variance collapse",
        collapse.iter().all(|&(a, b)| b <= 0.01 * a),
        format!("worst V_final/V_initial {worst:.6e} over {} fits (limit 1.0e-2)", collapse.len()),
    );

    depth_sweep(seed, depths_mm, dir, &mut rep)?;
    stage_maps(seed, dir, &mut rep)?;
    phantom(args, seed, dir, &mut rep)?;
    Ok(rep)
}

/// Noiseless recovery and the noisy repeatability runs; returns
/// `(V_initial, V_final)` of every fit.
fn calibration_runs(args: &ReproduceArgs, seed: u64, dir: &Path, rep: &mut Report) -> Result<Vec<(f64, f64)>> {
    let cfg = StftConfig::default();
    let opts = OptimizerOptions::default();
    let truth = DEFAULT_INJECTED_A2;

    let clean = calibrate(&prepared(&SimScenario::calibration(CALIBRATION_DEPTH, truth), seed)?, &cfg, &opts)
        .context("noiseless calibration")?;
    io::save_calibration(&dir.join("calibration.json"), &CalibrationRecord::from_result(&clean, PINNED_TIMESTAMP.into()))?;
    let rel = clean.model.a2 / truth - 1.0;
    rep.line("");
    rep.line("[noiseless calibration]");
    rep.line(format!("a2 {:.6e} m^2/rad (relative error {rel:+.4e})", clean.model.a2));
    rep.line(format!("objective {:.6e} -> {:.6e} in {} evaluations", clean.v_initial, clean.v_final, clean.evaluations));
    rep.check("coefficient recovery", rel.abs() < 0.01 && clean.converged, format!("relative error {rel:+.4e} (limit 1%)"));

    let mut rows = vec![];
    let mut collapse = vec![(clean.v_initial, clean.v_final)];
    for run in 0..args.runs {
        let s = derive_seed(seed, 1, run as u64);
        let scenario = SimScenario::calibration(CALIBRATION_DEPTH, truth).with_noise(NoiseSpec::SnrDb(args.snr_db));
        let r = calibrate(&prepared(&scenario, s)?, &cfg, &opts).with_context(|| format!("noisy calibration run {run}"))?;
        collapse.push((r.v_initial, r.v_final));
        rows.push(run_row(run, s, &r));
    }
    io::save_csv(&dir.join("repeatability.csv"), &rows)?;
    rep.line("");
    rep.line(format!("[repeatability: {} runs at {} dB]", args.runs, args.snr_db));
    for r in &rows {
        rep.line(format!("run {:2} a2 {:.6e} V {:.4e} -> {:.4e} converged {}", r.run, r.a2, r.v_initial, r.v_final, r.converged));
    }
    let a2s: Vec<f64> = rows.iter().map(|r| r.a2).collect();
    match repeatability_stats(&a2s) {
        Ok(st) => {
            rep.line(format!("mean {:.6e} stddev {:.6e} cv {:+.6e}", st.mean, st.stddev, st.cv));
            rep.check("repeatability", st.cv.abs() < 0.02, format!("|cv| {:.4e} over {} runs (limit 2%)", st.cv.abs(), a2s.len()));
        }
        Err(e) => rep.check("repeatability", false, format!("no statistics: {e}")),
    }
    Ok(collapse)
}

fn depth_sweep(seed: u64, depths_mm: &[f64], dir: &Path, rep: &mut Report) -> Result<()> {
    let truth = DEFAULT_INJECTED_A2;
    let cfg = StftConfig::scaled_to(EXTENDED_N);
    let cal = calibrate(&prepared(&SimScenario::extended(CALIBRATION_DEPTH, truth), seed)?, &cfg, &OptimizerOptions::default())
        .context("extended-range calibration")?;
    let scenarios: Vec<SimScenario> = depths_mm.iter().map(|&d| SimScenario::extended(d * 1e-3, truth)).collect();
    let opts = ReconOptions::default();
    let comp = resolution_vs_depth(&scenarios, Some(&cal.phase), seed, &opts).context("compensated depth sweep")?;
    let raw = resolution_vs_depth(&scenarios, None, seed, &opts).context("uncompensated depth sweep")?;
    let tl = transform_limited_fwhm(&scenarios[0].source);
    let rows = resolution_csv(&comp, &raw, tl);
    io::save_csv(&dir.join("resolution.csv"), &rows)?;
    io::write_atomic(&dir.join("resolution.svg"), resolution_plot(&rows, tl).as_bytes())?;

    let rolloff = sensitivity_rolloff(&scenarios, Some(&cal.phase), seed, &opts)?;
    let csv: Vec<RolloffCsv> = rolloff.iter().map(|r| RolloffCsv { depth_m: r.depth, peak_db: r.peak_db }).collect();
    io::save_csv(&dir.join("rolloff.csv"), &csv)?;
    io::write_atomic(&dir.join("rolloff.svg"), rolloff_plot(&rolloff).as_bytes())?;

    rep.line("");
    rep.line(format!("[depth sweep: {} samples, calibrated at {} um]", EXTENDED_N, CALIBRATION_DEPTH * 1e6));
    rep.line(format!("extended-range a2 {:.6e} m^2/rad", cal.model.a2));
    rep.line(format!("transform-limited FWHM {:.4} um", tl * 1e6));
    for ((c, u), r) in comp.iter().zip(&raw).zip(&rolloff) {
        rep.line(format!(
            "depth {:.3} mm: compensated {:.4} um ({:.4} TL), uncompensated {:.4} um ({:.4} TL), peak {:+.3} dB",
            c.depth * 1e3,
            c.fwhm * 1e6,
            c.fwhm / tl,
            u.fwhm * 1e6,
            u.fwhm / tl,
            r.peak_db
        ));
    }
    let widths = |rows: &[ResolutionRow]| {
        let max = rows.iter().map(|r| r.fwhm).fold(0.0, f64::max);
        let min = rows.iter().map(|r| r.fwhm).fold(f64::INFINITY, f64::min);
        (min, max)
    };
    let (min, max) = widths(&comp);
    rep.check(
        "depth independence",
        max <= 1.10 * tl && max / min <= 1.5,
        format!("worst compensated {:.4} TL (limit 1.10), max/min {:.4} (limit 1.5)", max / tl, max / min),
    );
    let (raw_min, _) = widths(&raw);
    rep.check("broadening", raw_min > 3.0 * tl, format!("narrowest uncompensated {:.4} TL (limit > 3)", raw_min / tl));
    Ok(())
}

/// Maps of one warped-detector fringe after each processing step.
fn stage_maps(seed: u64, dir: &Path, rep: &mut Report) -> Result<()> {
    let mut s = SimScenario::calibration(CALIBRATION_DEPTH, DEFAULT_INJECTED_A2);
    s.spectrometer.warp = GridWarp::Quadratic { strength: TFA_WARP };
    let (raw, reference, _) = generate_fringe(&s, seed)?;
    let cfg = StftConfig::default();
    let cal = calibrate(&preprocess(&raw, &reference)?, &cfg, &OptimizerOptions::default()).context("stage-map calibration")?;
    let out = dir.join("tfa");
    rep.line("");
    rep.line(format!("[time-frequency maps: warped detector, strength {TFA_WARP}]"));
    for stage in TfaStage::ALL {
        let f = stage_fringe(&raw, &reference, stage, Some((cal.model.a2, cal.model.a3)), &cfg)?;
        let map = stft(&f, &cfg)?;
        let ridge = extract_ridge(&map)?;
        write_map(&out, stage.name(), &map, &ridge, false)?;
        let v = ridge_variance(&ridge).map_or_else(|e| format!("n/a ({e})"), |v| format!("{v:.6e}"));
        rep.line(format!("{:<12} ridge variance {v} bin^2, coverage {:.4}", stage.name(), ridge.coverage()));
    }
    Ok(())
}

fn phantom_layers(i: usize) -> Vec<Reflector> {
    let x = i as f64 / PHANTOM_ASCANS as f64;
    let surface = 150e-6 + 40e-6 * (2.0 * std::f64::consts::PI * x).sin();
    vec![
        Reflector { depth: surface, reflectivity: 0.3 },
        Reflector { depth: surface + 80e-6, reflectivity: 0.1 },
        Reflector { depth: surface + 170e-6 + 20e-6 * x, reflectivity: 0.05 },
    ]
}

/// Spread of `b` over depth bins `lo..hi` about each bin's mean across
/// A-scans. Compensation makes the noise floor depth-dependent near the ends
/// of the range; the per-bin mean removes that profile.
fn region_sd(b: &BScan, lo: usize, hi: usize) -> f64 {
    let mut sum = 0.0;
    let mut count = 0usize;
    for j in lo..hi {
        let col = b.image.column(j);
        let mean = col.sum() / col.len() as f64;
        sum += col.iter().map(|x| (x - mean).powi(2)).sum::<f64>();
        count += col.len() - 1;
    }
    (sum / count as f64).sqrt()
}

/// Layered phantom imaged `frames` times, compensated, averaged.
fn phantom(args: &ReproduceArgs, seed: u64, dir: &Path, rep: &mut Report) -> Result<()> {
    let frames = args.frames.max(1);
    let cal = calibrate(
        &prepared(&SimScenario::calibration(CALIBRATION_DEPTH, DEFAULT_INJECTED_A2), seed)?,
        &StftConfig::default(),
        &OptimizerOptions::default(),
    )?;
    let opts = ReconOptions::default();
    let mut images = Vec::with_capacity(frames);
    for frame in 0..frames {
        let ascans: Vec<AScan> = (0..PHANTOM_ASCANS)
            .map(|i| {
                let mut s = SimScenario::calibration(CALIBRATION_DEPTH, DEFAULT_INJECTED_A2).with_noise(NoiseSpec::SnrDb(PHANTOM_SNR_DB));
                s.reflectors.reflectors = phantom_layers(i);
                let (f, r, _) = generate_fringe(&s, derive_seed(seed, 2, (frame * PHANTOM_ASCANS + i) as u64))?;
                Ok(reconstruct(&f, &r, Some(&cal.phase), &opts)?)
            })
            .collect::<Result<_>>()?;
        images.push(BScan::from_ascans(&ascans)?);
    }
    let averaged = average_frames(&images)?;
    let pgm = |b: &BScan| plot::pgm_log(&b.image.t().to_owned(), args.floor_db, args.ceiling_db);
    io::write_atomic(&dir.join("bscan_single.pgm"), &pgm(&images[0]))?;
    io::write_atomic(&dir.join("bscan_averaged.pgm"), &pgm(&averaged))?;

    let bins = averaged.depth_bins();
    let (lo, hi) = (bins * 17 / 20, bins * 19 / 20);
    let single = region_sd(&images[0], lo, hi);
    let avg = region_sd(&averaged, lo, hi);
    rep.line("");
    rep.line(format!("[B-scan phantom: {} A-scans x {} bins, {frames} frames at {PHANTOM_SNR_DB} dB]", averaged.ascans(), bins));
    rep.line(format!(
        "noise-region spread: single {single:.6e}, averaged {avg:.6e}, ratio {:.4} (sqrt(frames) {:.4})",
        single / avg,
        (frames as f64).sqrt()
    ));
    rep.line(format!("image floor {} dB, ceiling {} dB", args.floor_db, args.ceiling_db));
    Ok(())
}
