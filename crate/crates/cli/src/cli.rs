use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::config::Overrides;

#[derive(Debug, Parser)]
#[command(name = "octdisp", version, about = "Spectral-domain OCT dispersion calibration, reconstruction and simulation")]
pub struct Cli {
    #[command(flatten)]
    pub global: GlobalArgs,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Args)]
pub struct GlobalArgs {
    /// JSON tool configuration; flags override its entries
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Expected record length
    #[arg(long, global = true)]
    pub n: Option<usize>,
    /// STFT window length (samples)
    #[arg(long = "window", global = true)]
    pub window_len: Option<usize>,
    /// STFT window overlap (samples)
    #[arg(long = "overlap", global = true)]
    pub overlap_len: Option<usize>,
    /// Depth rows dropped from the top of every STFT column
    #[arg(long, global = true)]
    pub dc_rows: Option<usize>,
    /// Polynomial order of the phase correction (2 or 3)
    #[arg(long, global = true)]
    pub order: Option<u8>,
}

impl GlobalArgs {
    pub fn overrides(&self) -> Overrides {
        Overrides {
            n: self.n,
            window_len: self.window_len,
            overlap_len: self.overlap_len,
            dc_rows: self.dc_rows,
            order: self.order,
            seed: self.seed,
        }
    }
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Synthesize a fringe with its reference spectrum and detector grid
    Simulate(SimulateArgs),
    /// Estimate the phase correction from a single-reflector fringe
    Calibrate(CalibrateArgs),
    /// Reconstruct A-scans (and optionally a B-scan image)
    Reconstruct(ReconstructArgs),
    /// Time-frequency map and ridge of one fringe
    Tfa(TfaArgs),
    /// Resolution or roll-off table over a directory of scenarios
    Metrics(MetricsArgs),
    /// Regenerate every synthetic table, map and image with pass/fail checks
    Reproduce(ReproduceArgs),
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    /// Scenario JSON; omitted fields take their defaults
    #[arg(long)]
    pub scenario: Option<PathBuf>,
    /// Fringe output; the reference (.octr) and grid (.octk) go alongside
    #[arg(long)]
    pub out: PathBuf,
    /// Replace the reflectors with a single mirror at this depth (mm)
    #[arg(long)]
    pub depth: Option<f64>,
    /// Injected second-order coefficient (m^2/rad)
    #[arg(long, allow_hyphen_values = true)]
    pub a2: Option<f64>,
    /// Injected third-order coefficient (m^3/rad^2)
    #[arg(long, allow_hyphen_values = true)]
    pub a3: Option<f64>,
    /// Per-sample noise relative to the peak fringe envelope (dB)
    #[arg(long)]
    pub snr_db: Option<f64>,
    /// Use the 16384-sample extended-range spectrometer
    #[arg(long)]
    pub extended: bool,
}

#[derive(Debug, Args)]
pub struct CalibrateArgs {
    #[arg(long = "in")]
    pub input: PathBuf,
    /// Reference spectrum for raw fringes (default: input with .octr)
    #[arg(long)]
    pub reference: Option<PathBuf>,
    #[arg(long)]
    pub out: PathBuf,
    /// Value stored as created_utc instead of the current time
    #[arg(long)]
    pub timestamp: Option<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Taper {
    Hann,
    Rectangular,
}

impl From<Taper> for octdisp_core::WindowKind {
    fn from(t: Taper) -> Self {
        match t {
            Taper::Hann => octdisp_core::WindowKind::Hann,
            Taper::Rectangular => octdisp_core::WindowKind::Rectangular,
        }
    }
}

#[derive(Debug, Args)]
pub struct ReconstructArgs {
    /// Raw fringes; more than one forms a B-scan in the given order
    #[arg(long = "in", required = true, num_args = 1..)]
    pub inputs: Vec<PathBuf>,
    #[arg(long)]
    pub reference: Option<PathBuf>,
    /// Calibration record; omitted means no phase correction
    #[arg(long)]
    pub cal: Option<PathBuf>,
    /// A-scan table (ascan, bin, depth_m, magnitude, magnitude_db)
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, value_enum, default_value_t = Taper::Hann)]
    pub taper: Taper,
    #[arg(long, default_value_t = 4)]
    pub pad: usize,
    /// 8-bit log-compressed B-scan image (depth down, A-scans across)
    #[arg(long)]
    pub pgm: Option<PathBuf>,
    /// dB below the image maximum mapped to black
    #[arg(long, default_value_t = -60.0, allow_hyphen_values = true)]
    pub floor_db: f64,
    /// dB relative to the image maximum mapped to white
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    pub ceiling_db: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum TfaStage {
    Subtracted,
    Normalized,
    Resampled,
    Windowed,
    Compensated,
}

impl TfaStage {
    pub const ALL: [TfaStage; 5] = [
        TfaStage::Subtracted,
        TfaStage::Normalized,
        TfaStage::Resampled,
        TfaStage::Windowed,
        TfaStage::Compensated,
    ];

    pub fn name(self) -> &'static str {
        match self {
            TfaStage::Subtracted => "subtracted",
            TfaStage::Normalized => "normalized",
            TfaStage::Resampled => "resampled",
            TfaStage::Windowed => "windowed",
            TfaStage::Compensated => "compensated",
        }
    }
}

#[derive(Debug, Args)]
pub struct TfaArgs {
    #[arg(long = "in")]
    pub input: PathBuf,
    #[arg(long)]
    pub reference: Option<PathBuf>,
    /// Required for the compensated stage
    #[arg(long)]
    pub cal: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = TfaStage::Windowed)]
    pub stage: TfaStage,
    /// Receives tfa.csv, tfa.octt and ridge.csv
    #[arg(long)]
    pub out_dir: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum MetricKind {
    Resolution,
    Rolloff,
}

#[derive(Debug, Args)]
pub struct MetricsArgs {
    #[arg(value_enum)]
    pub kind: MetricKind,
    /// Directory of scenario JSON files, processed in file-name order
    #[arg(long)]
    pub scenarios: PathBuf,
    #[arg(long)]
    pub cal: Option<PathBuf>,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long)]
    pub plot: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ReproduceArgs {
    #[arg(long)]
    pub out_dir: PathBuf,
    /// Depth sweep in mm: start:stop:step or a comma list
    #[arg(long, default_value = "0.2:2.0:0.2")]
    pub depths: String,
    /// Noisy calibration runs
    #[arg(long, default_value_t = 10)]
    pub runs: usize,
    #[arg(long, default_value_t = 40.0)]
    pub snr_db: f64,
    /// Frames averaged into the B-scan phantom
    #[arg(long, default_value_t = 11)]
    pub frames: usize,
    #[arg(long, default_value_t = -60.0, allow_hyphen_values = true)]
    pub floor_db: f64,
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    pub ceiling_db: f64,
}

/// Depths in mm from `start:stop:step` (inclusive) or `a,b,c`.
pub fn parse_depths(spec: &str) -> Result<Vec<f64>, String> {
    let parse = |s: &str| s.trim().parse::<f64>().map_err(|e| format!("bad depth {s:?}: {e}"));
    let values = if spec.contains(':') {
        let parts: Vec<&str> = spec.split(':').collect();
        let [a, b, step] = parts[..] else {
            return Err(format!("expected start:stop:step, got {spec:?}"));
        };
        let (a, b, step) = (parse(a)?, parse(b)?, parse(step)?);
        if !(step > 0.0 && b >= a) {
            return Err(format!("need step > 0 and stop >= start in {spec:?}"));
        }
        let count = ((b - a) / step + 1e-9).floor() as usize + 1;
        (0..count).map(|i| ((a + i as f64 * step) * 1e9).round() / 1e9).collect()
    } else {
        spec.split(',').map(parse).collect::<Result<Vec<_>, _>>()?
    };
    if values.is_empty() || values.iter().any(|v| !v.is_finite() || *v <= 0.0) {
        return Err(format!("depths must be positive, got {spec:?}"));
    }
    Ok(values)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn depth_ranges_are_inclusive() {
        let d = parse_depths("0.2:2.0:0.2").unwrap();
        assert_eq!(d.len(), 10);
        assert_eq!(d[0], 0.2);
        assert_eq!(d[2], 0.6);
        assert_eq!(d[9], 2.0);
        assert_eq!(parse_depths("0.3, 1.5").unwrap(), vec![0.3, 1.5]);
        assert!(parse_depths("1:0:0.1").is_err());
        assert!(parse_depths("0.1:1").is_err());
        assert!(parse_depths("-1").is_err());
    }

    #[test]
    fn command_line_is_consistent() {
        use clap::CommandFactory;
        Cli::command().debug_assert();
    }
}
