use std::path::{Path, PathBuf};
use std::sync::Arc;

use anyhow::{bail, ensure, Context, Result};
use octdisp_core::formats::CalibrationRecord;
use octdisp_core::recon::{reconstruct_bscan, ResolutionRow, RolloffRow};
use octdisp_core::sim::{generate_fringe, NoiseSpec, Reflector, ReflectorSet, EXTENDED_N};
use octdisp_core::{
    calibrate, extract_ridge, measure_psf, normalize_to_reference, phase_correction, reconstruct,
    resample_to_linear_k, resolution_vs_depth, sensitivity_rolloff, stft, subtract_background,
    transform_limited_fwhm, AScan, KGrid, OptimizerOptions, PhaseCorrection, ReconOptions,
    ReferenceSpectrum, Ridge, RidgeObjective, SimScenario, SpectralFringe, Stage, StftConfig,
    TfaMap,
};
use serde::Serialize;

use crate::cli::{
    CalibrateArgs, MetricKind, MetricsArgs, ReconstructArgs, SimulateArgs, TfaArgs, TfaStage,
};
use crate::config::ToolConfig;
use crate::io;
use crate::plot::{self, Series};
use crate::Status;

pub fn simulate(args: &SimulateArgs, cfg: &ToolConfig) -> Result<Status> {
    let mut s = match &args.scenario {
        Some(p) => {
            let text = std::fs::read_to_string(p).with_context(|| format!("{}: cannot read", p.display()))?;
            serde_json::from_str::<SimScenario>(&text).with_context(|| format!("{}: invalid scenario", p.display()))?
        }
        None => SimScenario::default(),
    };
    if args.extended {
        s.spectrometer.n = EXTENDED_N;
    }
    if let Some(d) = args.depth {
        s.reflectors = ReflectorSet { reflectors: vec![Reflector { depth: d * 1e-3, reflectivity: 1.0 }], ..s.reflectors };
    }
    if let Some(a2) = args.a2 {
        s.injected.a2 = a2;
    }
    if let Some(a3) = args.a3 {
        s.injected.a3 = a3;
    }
    if let Some(snr) = args.snr_db {
        s.noise = NoiseSpec::SnrDb(snr);
    }
    let (fringe, reference, _) = generate_fringe(&s, cfg.seed).context("simulation failed")?;
    io::save_fringe(&args.out, &fringe)?;
    io::save_reference(&io::sibling(&args.out, "octr"), &reference)?;
    io::save_grid(&io::sibling(&args.out, "octk"), fringe.grid())?;
    println!("wrote {} ({} samples, seed {})", args.out.display(), fringe.len(), cfg.seed);
    Ok(Status::Ok)
}

/// `--reference`, then the configured path, then the input's `.octr` sibling.
fn reference_path(input: &Path, flag: Option<&PathBuf>, cfg: &ToolConfig) -> PathBuf {
    flag.cloned().or_else(|| cfg.paths.reference.clone()).unwrap_or_else(|| io::sibling(input, "octr"))
}

fn load_reference_for(input: &Path, flag: Option<&PathBuf>, cfg: &ToolConfig) -> Result<ReferenceSpectrum> {
    io::load_reference(&reference_path(input, flag, cfg)).with_context(|| format!("{}: a reference spectrum is required", input.display()))
}

/// Brings a fringe of any stage to `Resampled` or later.
pub fn to_resampled(f: SpectralFringe, reference: Option<&ReferenceSpectrum>) -> Result<SpectralFringe> {
    let need = |r: Option<&ReferenceSpectrum>| r.cloned().context("reference spectrum required for this stage");
    let f = match f.stage() {
        Stage::Raw => subtract_background(&f, &need(reference)?)?,
        _ => f,
    };
    let f = match f.stage() {
        Stage::BackgroundSubtracted => normalize_to_reference(&f, &need(reference)?)?,
        _ => f,
    };
    Ok(match f.stage() {
        Stage::Normalized => resample_to_linear_k(&f)?,
        _ => f,
    })
}

fn check_length(input: &Path, f: &SpectralFringe, cfg: &ToolConfig) -> Result<()> {
    ensure!(
        f.len() == cfg.n,
        "{}: fringe has {} samples but the configuration expects n = {} (set --n and a matching --window/--overlap)",
        input.display(),
        f.len(),
        cfg.n
    );
    Ok(())
}

pub fn calibrate_cmd(args: &CalibrateArgs, cfg: &ToolConfig) -> Result<Status> {
    let raw = io::load_fringe(&args.input)?;
    check_length(&args.input, &raw, cfg)?;
    let reference = if raw.stage() < Stage::Normalized {
        Some(load_reference_for(&args.input, args.reference.as_ref(), cfg)?)
    } else {
        None
    };
    let fringe = to_resampled(raw, reference.as_ref()).with_context(|| format!("{}: preprocessing failed", args.input.display()))?;
    let opts = OptimizerOptions { order: cfg.order(), ..Default::default() };
    let r = calibrate(&fringe, &cfg.stft(), &opts).with_context(|| format!("{}: calibration failed", args.input.display()))?;
    let stamp = args.timestamp.clone().unwrap_or_else(|| chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Secs, true));
    io::save_calibration(&args.out, &CalibrationRecord::from_result(&r, stamp))?;
    println!("a2 = {:.6e} m^2/rad", r.model.a2);
    println!("a3 = {:.6e} m^3/rad^2", r.model.a3);
    println!("objective {} -> {}", r.v_initial, r.v_final);
    println!("evaluations {}", r.evaluations);
    if r.converged {
        Ok(Status::Ok)
    } else {
        eprintln!("warning: optimizer stopped after {} iterations without meeting its tolerances", r.iterations);
        Ok(Status::Flagged)
    }
}

/// The stored vector when it was computed on `grid`, else the model
/// evaluated on `grid`.
pub fn phase_for_grid(rec: &CalibrationRecord, grid: &Arc<KGrid>) -> Result<PhaseCorrection> {
    if rec.n == grid.len() && rec.k0.to_bits() == grid.k0().to_bits() {
        return Ok(rec.phase_for(grid.clone())?);
    }
    Ok(phase_correction(&rec.model()?, grid)?)
}

fn calibration_for(flag: Option<&PathBuf>, cfg: &ToolConfig) -> Result<Option<CalibrationRecord>> {
    flag.or(cfg.paths.calibration.as_ref()).map(|p| io::load_calibration(p)).transpose()
}

#[derive(Serialize)]
struct AScanRow {
    ascan: usize,
    bin: usize,
    depth_m: f64,
    magnitude: f64,
    magnitude_db: f64,
}

pub fn reconstruct_cmd(args: &ReconstructArgs, cfg: &ToolConfig) -> Result<Status> {
    let first = &args.inputs[0];
    let reference = load_reference_for(first, args.reference.as_ref(), cfg)?;
    let fringes: Vec<SpectralFringe> = args.inputs.iter().map(|p| io::load_fringe(p)).collect::<Result<_>>()?;
    for (p, f) in args.inputs.iter().zip(&fringes) {
        ensure!(f.stage() == Stage::Raw, "{}: reconstruct expects a raw fringe, found {:?}", p.display(), f.stage());
        ensure!(f.len() == reference.len(), "{}: {} samples but the reference has {}", p.display(), f.len(), reference.len());
    }
    let cal = calibration_for(args.cal.as_ref(), cfg)?;
    let phase = match &cal {
        Some(rec) => Some(phase_for_grid(rec, &Arc::new(fringes[0].grid().linearized()))?),
        None => None,
    };
    let opts = ReconOptions { window: args.taper.into(), pad_factor: args.pad.max(1) };
    let ascans: Vec<AScan> = fringes
        .iter()
        .zip(&args.inputs)
        .map(|(f, p)| reconstruct(f, &reference, phase.as_ref(), &opts).with_context(|| format!("{}: reconstruction failed", p.display())))
        .collect::<Result<_>>()?;
    let rows: Vec<AScanRow> = ascans
        .iter()
        .enumerate()
        .flat_map(|(i, a)| {
            a.complex.iter().zip(&a.magnitude_db).enumerate().map(move |(bin, (z, &db))| AScanRow {
                ascan: i,
                bin,
                depth_m: a.depth_of(bin as f64),
                magnitude: z.norm(),
                magnitude_db: db,
            })
        })
        .collect();
    io::save_csv(&args.out, &rows)?;
    for (p, a) in args.inputs.iter().zip(&ascans) {
        match measure_psf(a) {
            Ok(m) => println!("{}: peak at {:.3} um, FWHM {:.3} um", p.display(), m.peak_depth * 1e6, m.fwhm * 1e6),
            Err(e) => println!("{}: no PSF ({e})", p.display()),
        }
    }
    if let Some(pgm) = &args.pgm {
        let b = reconstruct_bscan(&fringes, &reference, phase.as_ref(), &opts)?;
        io::write_atomic(pgm, &plot::pgm_log(&b.image.t().to_owned(), args.floor_db, args.ceiling_db))?;
    }
    Ok(Status::Ok)
}

/// Fringe whose STFT is the map for `stage`. Stages before resampling are
/// read on the detector pixel index.
pub fn stage_fringe(
    raw: &SpectralFringe,
    reference: &ReferenceSpectrum,
    stage: TfaStage,
    model: Option<(f64, f64)>,
    stft_cfg: &StftConfig,
) -> Result<SpectralFringe> {
    ensure!(raw.stage() == Stage::Raw, "stage maps need a raw fringe, found {:?}", raw.stage());
    let on_pixels = |f: &SpectralFringe| SpectralFringe::new(f.samples().to_vec(), Arc::new(f.grid().linearized()), Stage::Resampled);
    let sub = subtract_background(raw, reference)?;
    if stage == TfaStage::Subtracted {
        return Ok(on_pixels(&sub)?);
    }
    let norm = normalize_to_reference(&sub, reference)?;
    if stage == TfaStage::Normalized {
        return Ok(on_pixels(&norm)?);
    }
    let res = resample_to_linear_k(&norm)?;
    let (a2, a3) = match stage {
        TfaStage::Resampled => return Ok(res),
        TfaStage::Windowed => (0.0, 0.0),
        _ => model.context("the compensated stage needs a calibration")?,
    };
    let obj = RidgeObjective::new(&res, stft_cfg)?;
    Ok(SpectralFringe::new(obj.corrected_real(a2, a3), res.grid().clone(), Stage::Windowed)?)
}

#[derive(Serialize)]
struct CellRow {
    row: usize,
    col: usize,
    energy: f64,
}

#[derive(Serialize)]
struct RidgeRow {
    col: usize,
    k_center: f64,
    row: usize,
    depth_bin: f64,
    depth_m: f64,
    valid: bool,
}

pub fn ridge_rows(map: &TfaMap, ridge: &Ridge) -> Vec<impl Serialize> {
    ridge
        .depth_at_k
        .iter()
        .zip(&ridge.validity_mask)
        .enumerate()
        .map(|(col, (&row, &valid))| RidgeRow {
            col,
            k_center: map.k_centers[col],
            row,
            depth_bin: map.depth_bins[row],
            depth_m: map.depth_bins[row] * map.depth_per_bin,
            valid,
        })
        .collect()
}

pub fn write_map(dir: &Path, stem: &str, map: &TfaMap, ridge: &Ridge, with_cells: bool) -> Result<()> {
    io::save_tfa(&dir.join(format!("{stem}.octt")), map)?;
    io::save_csv(&dir.join(format!("{stem}_ridge.csv")), &ridge_rows(map, ridge))?;
    if with_cells {
        let cells: Vec<CellRow> =
            map.energy.indexed_iter().map(|((row, col), &energy)| CellRow { row, col, energy }).collect();
        io::save_csv(&dir.join(format!("{stem}.csv")), &cells)?;
    }
    Ok(())
}

pub fn tfa_cmd(args: &TfaArgs, cfg: &ToolConfig) -> Result<Status> {
    let raw = io::load_fringe(&args.input)?;
    check_length(&args.input, &raw, cfg)?;
    let reference = load_reference_for(&args.input, args.reference.as_ref(), cfg)?;
    let model = calibration_for(args.cal.as_ref(), cfg)?.map(|r| (r.a2, r.a3));
    let stft_cfg = cfg.stft();
    let f = stage_fringe(&raw, &reference, args.stage, model, &stft_cfg).with_context(|| format!("{}: {} stage", args.input.display(), args.stage.name()))?;
    let map = stft(&f, &stft_cfg)?;
    let ridge = extract_ridge(&map)?;
    io::save_tfa(&args.out_dir.join("tfa.octt"), &map)?;
    let cells: Vec<CellRow> = map.energy.indexed_iter().map(|((row, col), &energy)| CellRow { row, col, energy }).collect();
    io::save_csv(&args.out_dir.join("tfa.csv"), &cells)?;
    io::save_csv(&args.out_dir.join("ridge.csv"), &ridge_rows(&map, &ridge))?;
    match octdisp_core::ridge_variance(&ridge) {
        Ok(v) => println!("{}: {} columns, ridge variance {v} bin^2", args.stage.name(), map.cols()),
        Err(e) => println!("{}: {} columns, no ridge variance ({e})", args.stage.name(), map.cols()),
    }
    Ok(Status::Ok)
}

fn load_scenarios(dir: &Path) -> Result<Vec<(PathBuf, SimScenario)>> {
    let mut paths: Vec<PathBuf> = std::fs::read_dir(dir)
        .with_context(|| format!("{}: cannot list scenarios", dir.display()))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|e| e == "json"))
        .collect();
    paths.sort();
    if paths.is_empty() {
        bail!("{}: no scenario .json files", dir.display());
    }
    paths
        .into_iter()
        .map(|p| {
            let text = std::fs::read_to_string(&p).with_context(|| format!("{}: cannot read", p.display()))?;
            let s: SimScenario = serde_json::from_str(&text).with_context(|| format!("{}: invalid scenario", p.display()))?;
            s.validate().with_context(|| format!("{}: invalid scenario", p.display()))?;
            ensure!(!s.reflectors.reflectors.is_empty(), "{}: scenario has no reflector", p.display());
            Ok((p, s))
        })
        .collect()
}

#[derive(Serialize)]
pub struct ResolutionCsv {
    pub depth_m: f64,
    pub fwhm_m: f64,
    pub peak_depth_m: f64,
    pub fwhm_over_tl: f64,
    pub fwhm_uncompensated_m: f64,
}

#[derive(Serialize)]
pub struct RolloffCsv {
    pub depth_m: f64,
    pub peak_db: f64,
}

pub fn resolution_csv(comp: &[ResolutionRow], raw: &[ResolutionRow], tl: f64) -> Vec<ResolutionCsv> {
    comp.iter()
        .zip(raw)
        .map(|(c, u)| ResolutionCsv {
            depth_m: c.depth,
            fwhm_m: c.fwhm,
            peak_depth_m: c.peak_depth,
            fwhm_over_tl: c.fwhm / tl,
            fwhm_uncompensated_m: u.fwhm,
        })
        .collect()
}

pub fn resolution_plot(rows: &[ResolutionCsv], tl: f64) -> String {
    let um = |f: fn(&ResolutionCsv) -> f64| rows.iter().map(|r| (r.depth_m * 1e3, f(r) * 1e6)).collect::<Vec<_>>();
    let span = (rows.first().map_or(0.0, |r| r.depth_m) * 1e3, rows.last().map_or(1.0, |r| r.depth_m) * 1e3);
    plot::line_plot(
        "Axial resolution versus depth",
        "depth (mm)",
        "FWHM (um)",
        &[
            Series::new("compensated", um(|r| r.fwhm_m)),
            Series::new("uncompensated", um(|r| r.fwhm_uncompensated_m)),
            Series::new("transform limit", vec![(span.0, tl * 1e6), (span.1, tl * 1e6)]).dashed(),
        ],
    )
}

pub fn rolloff_plot(rows: &[RolloffRow]) -> String {
    plot::line_plot(
        "Sensitivity roll-off",
        "depth (mm)",
        "peak (dB)",
        &[Series::new("peak", rows.iter().map(|r| (r.depth * 1e3, r.peak_db)).collect())],
    )
}

pub fn metrics_cmd(args: &MetricsArgs, cfg: &ToolConfig) -> Result<Status> {
    let loaded = load_scenarios(&args.scenarios)?;
    let n = loaded[0].1.spectrometer.n;
    if let Some((p, _)) = loaded.iter().find(|(_, s)| s.spectrometer.n != n) {
        bail!("{}: record length differs from {}", p.display(), loaded[0].0.display());
    }
    let scenarios: Vec<SimScenario> = loaded.into_iter().map(|(_, s)| s).collect();
    let phase = match calibration_for(args.cal.as_ref(), cfg)? {
        Some(rec) => {
            let (_, _, grid) = generate_fringe(&scenarios[0], cfg.seed)?;
            Some(phase_for_grid(&rec, &grid)?)
        }
        None => None,
    };
    let opts = ReconOptions::default();
    match args.kind {
        MetricKind::Resolution => {
            let comp = resolution_vs_depth(&scenarios, phase.as_ref(), cfg.seed, &opts)?;
            let raw = match phase {
                Some(_) => resolution_vs_depth(&scenarios, None, cfg.seed, &opts)?,
                None => comp.clone(),
            };
            let tl = transform_limited_fwhm(&scenarios[0].source);
            let rows = resolution_csv(&comp, &raw, tl);
            io::save_csv(&args.out, &rows)?;
            if let Some(p) = &args.plot {
                io::write_atomic(p, resolution_plot(&rows, tl).as_bytes())?;
            }
        }
        MetricKind::Rolloff => {
            let rows = sensitivity_rolloff(&scenarios, phase.as_ref(), cfg.seed, &opts)?;
            let csv: Vec<RolloffCsv> = rows.iter().map(|r| RolloffCsv { depth_m: r.depth, peak_db: r.peak_db }).collect();
            io::save_csv(&args.out, &csv)?;
            if let Some(p) = &args.plot {
                io::write_atomic(p, rolloff_plot(&rows).as_bytes())?;
            }
        }
    }
    println!("wrote {} ({} scenarios)", args.out.display(), scenarios.len());
    Ok(Status::Ok)
}
