//! File access. Every error names the path; every write goes through a
//! temporary file in the target directory and is renamed into place.

use std::io::Write;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use octdisp_core::formats::{self, CalibrationRecord};
use octdisp_core::{KGrid, ReferenceSpectrum, SpectralFringe, TfaMap};
use serde::Serialize;

pub fn read(path: &Path) -> Result<Vec<u8>> {
    std::fs::read(path).with_context(|| format!("{}: cannot read", path.display()))
}

pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p.to_path_buf(),
        _ => PathBuf::from("."),
    };
    std::fs::create_dir_all(&dir).with_context(|| format!("{}: cannot create directory", dir.display()))?;
    let mut tmp = tempfile::NamedTempFile::new_in(&dir).with_context(|| format!("{}: cannot create temporary file", dir.display()))?;
    tmp.write_all(bytes).and_then(|_| tmp.as_file().sync_all()).with_context(|| format!("{}: write failed", path.display()))?;
    tmp.persist(path).with_context(|| format!("{}: cannot rename into place", path.display()))?;
    Ok(())
}

pub fn load_fringe(path: &Path) -> Result<SpectralFringe> {
    formats::decode_fringe(&read(path)?).with_context(|| format!("{}: not a valid OCTF fringe", path.display()))
}

pub fn load_reference(path: &Path) -> Result<ReferenceSpectrum> {
    formats::decode_reference(&read(path)?).with_context(|| format!("{}: not a valid OCTR reference", path.display()))
}

pub fn load_grid(path: &Path) -> Result<KGrid> {
    formats::decode_grid(&read(path)?).with_context(|| format!("{}: not a valid OCTK grid", path.display()))
}

pub fn load_calibration(path: &Path) -> Result<CalibrationRecord> {
    let text = std::fs::read_to_string(path).with_context(|| format!("{}: cannot read", path.display()))?;
    CalibrationRecord::from_json(&text).with_context(|| format!("{}: not a valid calibration record", path.display()))
}

pub fn save_fringe(path: &Path, f: &SpectralFringe) -> Result<()> {
    write_atomic(path, &formats::encode_fringe(f)?)
}

pub fn save_reference(path: &Path, r: &ReferenceSpectrum) -> Result<()> {
    write_atomic(path, &formats::encode_reference(r)?)
}

pub fn save_grid(path: &Path, g: &KGrid) -> Result<()> {
    write_atomic(path, &formats::encode_grid(g)?)
}

pub fn save_tfa(path: &Path, map: &TfaMap) -> Result<()> {
    write_atomic(path, &formats::encode_tfa(map)?)
}

pub fn save_calibration(path: &Path, rec: &CalibrationRecord) -> Result<()> {
    write_atomic(path, rec.to_json()?.as_bytes())
}

/// Serializes `rows` with a header derived from the row type.
pub fn csv_bytes<T: Serialize>(rows: &[T]) -> Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in rows {
        w.serialize(r)?;
    }
    Ok(w.into_inner().map_err(|e| e.into_error())?)
}

pub fn save_csv<T: Serialize>(path: &Path, rows: &[T]) -> Result<()> {
    write_atomic(path, &csv_bytes(rows)?)
}

/// `dir/stem.ext` next to an input file.
pub fn sibling(path: &Path, ext: &str) -> PathBuf {
    path.with_extension(ext)
}
