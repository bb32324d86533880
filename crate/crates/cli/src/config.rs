//! Tool configuration: JSON file defaults overridden by command-line flags.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use octdisp_core::{Order, StftConfig, WindowKind};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PathConfig {
    /// Reference spectrum used when a raw fringe has no `--reference`.
    pub reference: Option<PathBuf>,
    /// Calibration record used when `--cal` is absent.
    pub calibration: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ToolConfig {
    /// Expected record length.
    pub n: usize,
    pub window_len: usize,
    pub overlap_len: usize,
    pub dc_rows: usize,
    pub order: u8,
    pub seed: u64,
    pub paths: PathConfig,
}

impl Default for ToolConfig {
    fn default() -> Self {
        let stft = StftConfig::default();
        Self {
            n: 2048,
            window_len: stft.window_len,
            overlap_len: stft.overlap_len,
            dc_rows: stft.dc_exclusion_rows,
            order: 2,
            seed: 0,
            paths: PathConfig::default(),
        }
    }
}

/// Flag values that replace configuration entries when present.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub n: Option<usize>,
    pub window_len: Option<usize>,
    pub overlap_len: Option<usize>,
    pub dc_rows: Option<usize>,
    pub order: Option<u8>,
    pub seed: Option<u64>,
}

impl ToolConfig {
    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("{}: cannot read config", path.display()))?;
        serde_json::from_str(&text).with_context(|| format!("{}: invalid config", path.display()))
    }

    /// File (or defaults), then flags, then validation.
    pub fn resolve(file: Option<&Path>, flags: &Overrides) -> Result<Self> {
        let mut cfg = match file {
            Some(p) => Self::from_file(p)?,
            None => Self::default(),
        };
        cfg.apply(flags);
        cfg.validate().with_context(|| match file {
            Some(p) => format!("{}: configuration rejected", p.display()),
            None => "configuration rejected".to_string(),
        })?;
        Ok(cfg)
    }

    pub fn apply(&mut self, flags: &Overrides) {
        self.n = flags.n.unwrap_or(self.n);
        self.window_len = flags.window_len.unwrap_or(self.window_len);
        self.overlap_len = flags.overlap_len.unwrap_or(self.overlap_len);
        self.dc_rows = flags.dc_rows.unwrap_or(self.dc_rows);
        self.order = flags.order.unwrap_or(self.order);
        self.seed = flags.seed.unwrap_or(self.seed);
    }

    pub fn validate(&self) -> Result<()> {
        if Order::from_number(self.order).is_none() {
            bail!("order must be 2 or 3, got {}", self.order);
        }
        self.stft().validate(self.n)?;
        Ok(())
    }

    pub fn stft(&self) -> StftConfig {
        StftConfig {
            window_len: self.window_len,
            overlap_len: self.overlap_len,
            window: WindowKind::Hann,
            fft_len: self.window_len,
            dc_exclusion_rows: self.dc_rows,
        }
    }

    pub fn order(&self) -> Order {
        Order::from_number(self.order).unwrap_or_default()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_are_the_calibration_geometry() {
        let cfg = ToolConfig::default();
        cfg.validate().unwrap();
        assert_eq!(octdisp_core::k_eval_count(cfg.n, cfg.window_len, cfg.overlap_len).unwrap(), 94);
        assert_eq!(cfg.stft(), StftConfig::default());
    }

    #[test]
    fn flags_win_over_file_values() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("cfg.json");
        std::fs::write(&path, r#"{"order": 3, "seed": 5, "dc_rows": 40}"#).unwrap();
        let cfg = ToolConfig::resolve(Some(&path), &Overrides { seed: Some(9), ..Default::default() }).unwrap();
        assert_eq!(cfg.order, 3);
        assert_eq!(cfg.seed, 9);
        assert_eq!(cfg.dc_rows, 40);
        assert_eq!(cfg.window_len, 1024);
    }

    #[test]
    fn invalid_geometry_is_rejected_with_the_file_name() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("bad.json");
        std::fs::write(&path, r#"{"window_len": 4096}"#).unwrap();
        let err = ToolConfig::resolve(Some(&path), &Overrides::default()).unwrap_err();
        assert!(format!("{err:#}").contains("bad.json"));
    }

    #[test]
    fn unknown_keys_and_orders_are_rejected() {
        assert!(serde_json::from_str::<ToolConfig>(r#"{"windw_len": 10}"#).is_err());
        let err = ToolConfig::resolve(None, &Overrides { order: Some(4), ..Default::default() }).unwrap_err();
        assert!(format!("{err:#}").contains("order"));
    }
}
