//! Little-endian binary containers (fringe, grid, reference, TFA map) and
//! the JSON calibration record.

use std::sync::Arc;

use base64::engine::general_purpose::STANDARD;
use base64::Engine;
use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::KGrid;
use crate::optimize::{CalibrationResult, DispersionModel, PhaseCorrection};
use crate::signal::{ReferenceSpectrum, SpectralFringe, Stage};
use crate::tfa::TfaMap;

pub const FORMAT_VERSION: u16 = 1;
pub const CALIBRATION_VERSION: u32 = 1;

pub const FRINGE_MAGIC: &[u8; 4] = b"OCTF";
pub const GRID_MAGIC: &[u8; 4] = b"OCTK";
pub const REFERENCE_MAGIC: &[u8; 4] = b"OCTR";
pub const TFA_MAGIC: &[u8; 4] = b"OCTT";

struct Reader<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn new(buf: &'a [u8]) -> Self {
        Self { buf, pos: 0 }
    }

    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        let end = self.pos.checked_add(n).filter(|&e| e <= self.buf.len()).ok_or_else(|| {
            Error::Format(format!("truncated: need {n} bytes at offset {}, have {}", self.pos, self.buf.len()))
        })?;
        let s = &self.buf[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    fn header(&mut self, magic: &[u8; 4]) -> Result<()> {
        let got = self.take(4)?;
        if got != magic {
            return Err(Error::Format(format!(
                "bad magic {:?}, expected {:?}",
                String::from_utf8_lossy(got),
                String::from_utf8_lossy(magic)
            )));
        }
        let version = self.u16()?;
        if version != FORMAT_VERSION {
            return Err(Error::Format(format!("unsupported version {version}")));
        }
        Ok(())
    }

    fn u8(&mut self) -> Result<u8> {
        Ok(self.take(1)?[0])
    }

    fn u16(&mut self) -> Result<u16> {
        Ok(u16::from_le_bytes(self.take(2)?.try_into().expect("2 bytes")))
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().expect("4 bytes")))
    }

    fn f64s(&mut self, n: usize) -> Result<Vec<f64>> {
        let bytes = self.take(n.checked_mul(8).ok_or_else(|| Error::Format("length overflow".into()))?)?;
        Ok(bytes.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes"))).collect())
    }

    fn f32s(&mut self, n: usize) -> Result<Vec<f32>> {
        let bytes = self.take(n.checked_mul(4).ok_or_else(|| Error::Format("length overflow".into()))?)?;
        Ok(bytes.chunks_exact(4).map(|c| f32::from_le_bytes(c.try_into().expect("4 bytes"))).collect())
    }

    fn finish(&self) -> Result<()> {
        if self.pos != self.buf.len() {
            return Err(Error::Format(format!("{} trailing bytes", self.buf.len() - self.pos)));
        }
        Ok(())
    }
}

fn header(out: &mut Vec<u8>, magic: &[u8; 4]) {
    out.extend_from_slice(magic);
    out.extend_from_slice(&FORMAT_VERSION.to_le_bytes());
}

fn put_len(out: &mut Vec<u8>, n: usize) -> Result<()> {
    let n = u32::try_from(n).map_err(|_| Error::Format(format!("length {n} exceeds u32")))?;
    out.extend_from_slice(&n.to_le_bytes());
    Ok(())
}

fn put_f64s(out: &mut Vec<u8>, v: &[f64]) {
    for x in v {
        out.extend_from_slice(&x.to_le_bytes());
    }
}

pub fn encode_fringe(f: &SpectralFringe) -> Result<Vec<u8>> {
    let mut out = Vec::with_capacity(11 + 16 * f.len());
    header(&mut out, FRINGE_MAGIC);
    put_len(&mut out, f.len())?;
    out.push(f.stage().code());
    put_f64s(&mut out, f.samples());
    put_f64s(&mut out, f.grid().wavenumbers());
    Ok(out)
}

pub fn decode_fringe(bytes: &[u8]) -> Result<SpectralFringe> {
    let mut r = Reader::new(bytes);
    r.header(FRINGE_MAGIC)?;
    let n = r.u32()? as usize;
    let code = r.u8()?;
    let stage = Stage::from_code(code).ok_or_else(|| Error::Format(format!("unknown stage code {code}")))?;
    let samples = r.f64s(n)?;
    let k = r.f64s(n)?;
    r.finish()?;
    SpectralFringe::from_detector(samples, k, stage)
}

pub fn encode_grid(g: &KGrid) -> Result<Vec<u8>> {
    let mut out = Vec::with_capacity(10 + 8 * g.len());
    header(&mut out, GRID_MAGIC);
    put_len(&mut out, g.len())?;
    put_f64s(&mut out, g.wavenumbers());
    Ok(out)
}

pub fn decode_grid(bytes: &[u8]) -> Result<KGrid> {
    let mut r = Reader::new(bytes);
    r.header(GRID_MAGIC)?;
    let n = r.u32()? as usize;
    let k = r.f64s(n)?;
    r.finish()?;
    KGrid::new(k)
}

/// `OCTR`: header, u32 N, N background values, N source-power values.
pub fn encode_reference(rf: &ReferenceSpectrum) -> Result<Vec<u8>> {
    let mut out = Vec::with_capacity(10 + 16 * rf.len());
    header(&mut out, REFERENCE_MAGIC);
    put_len(&mut out, rf.len())?;
    put_f64s(&mut out, &rf.background);
    put_f64s(&mut out, &rf.source_power);
    Ok(out)
}

pub fn decode_reference(bytes: &[u8]) -> Result<ReferenceSpectrum> {
    let mut r = Reader::new(bytes);
    r.header(REFERENCE_MAGIC)?;
    let n = r.u32()? as usize;
    let background = r.f64s(n)?;
    let source_power = r.f64s(n)?;
    r.finish()?;
    ReferenceSpectrum::new(background, source_power)
}

/// `OCTT`: header, u32 rows, u32 cols, u32 first depth bin, row-major f32
/// energies, then one f32 center wavenumber per column.
pub fn encode_tfa(map: &TfaMap) -> Result<Vec<u8>> {
    let (rows, cols) = map.energy.dim();
    let mut out = Vec::with_capacity(18 + 4 * (rows * cols + cols));
    header(&mut out, TFA_MAGIC);
    put_len(&mut out, rows)?;
    put_len(&mut out, cols)?;
    put_len(&mut out, map.depth_bins.first().map_or(0, |&b| b as usize))?;
    for v in map.energy.iter() {
        out.extend_from_slice(&(*v as f32).to_le_bytes());
    }
    for v in &map.k_centers {
        out.extend_from_slice(&(*v as f32).to_le_bytes());
    }
    Ok(out)
}

/// Decoded `OCTT` contents in single precision.
#[derive(Debug, Clone, PartialEq)]
pub struct TfaGrid {
    pub energy: Array2<f32>,
    pub first_row: usize,
    pub k_centers: Vec<f32>,
}

pub fn decode_tfa(bytes: &[u8]) -> Result<TfaGrid> {
    let mut r = Reader::new(bytes);
    r.header(TFA_MAGIC)?;
    let rows = r.u32()? as usize;
    let cols = r.u32()? as usize;
    let first_row = r.u32()? as usize;
    let cells = rows.checked_mul(cols).ok_or_else(|| Error::Format("dimension overflow".into()))?;
    let energy = Array2::from_shape_vec((rows, cols), r.f32s(cells)?)
        .map_err(|e| Error::Format(e.to_string()))?;
    let k_centers = r.f32s(cols)?;
    r.finish()?;
    Ok(TfaGrid { energy, first_row, k_centers })
}

mod b64_f64s {
    use super::*;
    use serde::{Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &[f64], s: S) -> std::result::Result<S::Ok, S::Error> {
        let mut bytes = Vec::with_capacity(8 * v.len());
        put_f64s(&mut bytes, v);
        s.serialize_str(&STANDARD.encode(bytes))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<Vec<f64>, D::Error> {
        let text = String::deserialize(d)?;
        let bytes = STANDARD.decode(text).map_err(serde::de::Error::custom)?;
        if bytes.len() % 8 != 0 {
            return Err(serde::de::Error::custom("base64 payload is not a whole number of f64"));
        }
        Ok(bytes.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes"))).collect())
    }
}

/// Persisted calibration; `dphi` is base64 of little-endian f64.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CalibrationRecord {
    pub version: u32,
    pub n: usize,
    pub k0: f64,
    pub a2: f64,
    pub a3: f64,
    #[serde(with = "b64_f64s")]
    pub dphi: Vec<f64>,
    pub v_initial: f64,
    pub v_final: f64,
    pub evaluations: usize,
    pub created_utc: String,
}

impl CalibrationRecord {
    pub fn from_result(r: &CalibrationResult, created_utc: String) -> Self {
        Self {
            version: CALIBRATION_VERSION,
            n: r.phase.dphi.len(),
            k0: r.model.k0,
            a2: r.model.a2,
            a3: r.model.a3,
            dphi: r.phase.dphi.clone(),
            v_initial: r.v_initial,
            v_final: r.v_final,
            evaluations: r.evaluations,
            created_utc,
        }
    }

    pub fn model(&self) -> Result<DispersionModel> {
        DispersionModel::new(self.a2, self.a3, self.k0)
    }

    /// Stored phase vector attached to `grid`, which must be linear and of length `n`.
    pub fn phase_for(&self, grid: Arc<KGrid>) -> Result<PhaseCorrection> {
        if !grid.is_linear() {
            return Err(Error::NonLinearGrid);
        }
        if grid.len() != self.n || self.dphi.len() != self.n {
            return Err(Error::LengthMismatch { expected: grid.len(), actual: self.dphi.len() });
        }
        PhaseCorrection::new(self.dphi.clone(), grid)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let rec: Self = serde_json::from_str(text)?;
        if rec.version != CALIBRATION_VERSION {
            return Err(Error::Format(format!("unsupported calibration version {}", rec.version)));
        }
        if rec.dphi.len() != rec.n {
            return Err(Error::LengthMismatch { expected: rec.n, actual: rec.dphi.len() });
        }
        Ok(rec)
    }
}
