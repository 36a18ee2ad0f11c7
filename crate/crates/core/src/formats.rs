//! Binary map and cube files, PGM export and line-cut text.
//!
//! FMAP1 and RCUB1 files share a layout: a 6-byte ASCII magic line, one line
//! of JSON header, then little-endian `f32` samples, row-major.

use std::fs;
use std::io::Write;
use std::path::Path;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::acquisition::{Image, ImageCube, PulseParams, StreamFrame};
use crate::error::{Error, Result};
use crate::fieldcore::ComplexVec3;
use crate::nearfield::{Component, FieldPhasorMap, GridSpec, PolarizedFieldMap};

pub const FMAP_MAGIC: &[u8; 6] = b"FMAP1\n";
pub const RCUB_MAGIC: &[u8; 6] = b"RCUB1\n";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MapKind {
    Phasor,
    Polarized,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FmapHeader {
    pub kind: MapKind,
    pub grid: GridSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub component: Option<Component>,
    pub units: String,
    /// Samples per pixel.
    pub k: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RcubHeader {
    pub grid: GridSpec,
    pub component: Component,
    pub dt_list_ns: Vec<f64>,
    pub pulse: PulseParams,
    pub seed: Option<u64>,
    pub n_frames: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub timestamp_ms: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mw_on: Option<bool>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum FieldMapFile {
    Phasor(FieldPhasorMap),
    Polarized(PolarizedFieldMap),
}

fn push_record<H: Serialize>(out: &mut Vec<u8>, magic: &[u8; 6], header: &H, samples: impl Iterator<Item = f64>) {
    out.extend_from_slice(magic);
    out.extend_from_slice(serde_json::to_string(header).expect("header serializes").as_bytes());
    out.push(b'\n');
    for v in samples {
        out.extend_from_slice(&(v as f32).to_le_bytes());
    }
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn err(&self, at: usize, msg: impl Into<String>) -> Error {
        Error::Format {
            offset: at as u64,
            msg: msg.into(),
        }
    }

    fn at_end(&self) -> bool {
        self.pos >= self.bytes.len()
    }

    fn magic(&mut self, magic: &[u8; 6]) -> Result<()> {
        let got = self.bytes.get(self.pos..self.pos + 6);
        if got != Some(&magic[..]) {
            return Err(self.err(
                self.pos,
                format!("expected magic {:?}", String::from_utf8_lossy(&magic[..5])),
            ));
        }
        self.pos += 6;
        Ok(())
    }

    fn header<H: for<'de> Deserialize<'de>>(&mut self) -> Result<H> {
        let start = self.pos;
        let len = self.bytes[start..]
            .iter()
            .position(|b| *b == b'\n')
            .ok_or_else(|| self.err(start, "unterminated header line"))?;
        let h = serde_json::from_slice(&self.bytes[start..start + len])
            .map_err(|e| self.err(start, format!("bad header: {e}")))?;
        self.pos = start + len + 1;
        Ok(h)
    }

    fn samples(&mut self, n: usize) -> Result<Vec<f64>> {
        let need = n
            .checked_mul(4)
            .ok_or_else(|| self.err(self.pos, "sample count overflows"))?;
        let have = self.bytes.len() - self.pos;
        if have < need {
            return Err(self.err(
                self.bytes.len(),
                format!("truncated data: {have} of {need} bytes present"),
            ));
        }
        let out = self.bytes[self.pos..self.pos + need]
            .chunks_exact(4)
            .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]) as f64)
            .collect();
        self.pos += need;
        Ok(out)
    }

    fn finish(&self) -> Result<()> {
        if !self.at_end() {
            return Err(self.err(self.pos, "trailing bytes after data"));
        }
        Ok(())
    }
}

fn checked_grid(r: &Reader, grid: &GridSpec) -> Result<()> {
    grid.validate().map_err(|e| r.err(6, format!("invalid grid: {e}")))
}

pub fn encode_phasor_map(map: &FieldPhasorMap) -> Vec<u8> {
    let header = FmapHeader {
        kind: MapKind::Phasor,
        grid: map.grid,
        component: None,
        units: "T".into(),
        k: 6,
    };
    let mut out = Vec::new();
    push_record(
        &mut out,
        FMAP_MAGIC,
        &header,
        map.values
            .iter()
            .flat_map(|v| [v.x.re, v.x.im, v.y.re, v.y.im, v.z.re, v.z.im]),
    );
    out
}

pub fn encode_polarized_map(map: &PolarizedFieldMap) -> Vec<u8> {
    let header = FmapHeader {
        kind: MapKind::Polarized,
        grid: map.grid,
        component: Some(map.component),
        units: "T".into(),
        k: 1,
    };
    let mut out = Vec::new();
    push_record(&mut out, FMAP_MAGIC, &header, map.values.iter().copied());
    out
}

pub fn decode_fmap(bytes: &[u8]) -> Result<FieldMapFile> {
    let mut r = Reader { bytes, pos: 0 };
    r.magic(FMAP_MAGIC)?;
    let h: FmapHeader = r.header()?;
    checked_grid(&r, &h.grid)?;
    let expected_k = match h.kind {
        MapKind::Phasor => 6,
        MapKind::Polarized => 1,
    };
    if h.k != expected_k {
        return Err(r.err(6, format!("k = {} does not match {:?} map", h.k, h.kind)));
    }
    let data = r.samples(h.grid.len() * h.k)?;
    r.finish()?;
    Ok(match h.kind {
        MapKind::Phasor => FieldMapFile::Phasor(FieldPhasorMap {
            grid: h.grid,
            values: data
                .chunks_exact(6)
                .map(|c| {
                    ComplexVec3::new(
                        Complex64::new(c[0], c[1]),
                        Complex64::new(c[2], c[3]),
                        Complex64::new(c[4], c[5]),
                    )
                })
                .collect(),
        }),
        MapKind::Polarized => FieldMapFile::Polarized(PolarizedFieldMap {
            grid: h.grid,
            component: h.component.ok_or_else(|| r.err(6, "polarized map without component"))?,
            values: data,
        }),
    })
}

pub fn decode_polarized_map(bytes: &[u8]) -> Result<PolarizedFieldMap> {
    match decode_fmap(bytes)? {
        FieldMapFile::Polarized(m) => Ok(m),
        FieldMapFile::Phasor(_) => Err(Error::Format {
            offset: 6,
            msg: "expected a polarized map, found a phasor map".into(),
        }),
    }
}

pub fn encode_cube(cube: &ImageCube) -> Vec<u8> {
    let header = RcubHeader {
        grid: cube.grid,
        component: cube.component,
        dt_list_ns: cube.dt_list.clone(),
        pulse: cube.pulse,
        seed: cube.seed,
        n_frames: cube.frames.len(),
        timestamp_ms: None,
        mw_on: None,
    };
    let mut out = Vec::new();
    push_record(
        &mut out,
        RCUB_MAGIC,
        &header,
        cube.frames.iter().flat_map(|f| f.data.iter().copied()),
    );
    out
}

fn split_frames(grid: &GridSpec, data: Vec<f64>) -> Vec<Image> {
    data.chunks_exact(grid.len())
        .map(|c| Image {
            nx: grid.nx,
            ny: grid.ny,
            data: c.to_vec(),
        })
        .collect()
}

fn read_cube_record(r: &mut Reader) -> Result<(RcubHeader, Vec<Image>)> {
    r.magic(RCUB_MAGIC)?;
    let start = r.pos;
    let h: RcubHeader = r.header()?;
    h.grid
        .validate()
        .map_err(|e| r.err(start, format!("invalid grid: {e}")))?;
    if h.n_frames != h.dt_list_ns.len() {
        return Err(r.err(start, "n_frames differs from dt_list_ns length"));
    }
    let data = r.samples(h.grid.len() * h.n_frames)?;
    let frames = split_frames(&h.grid, data);
    Ok((h, frames))
}

pub fn decode_cube(bytes: &[u8]) -> Result<ImageCube> {
    let mut r = Reader { bytes, pos: 0 };
    let (h, frames) = read_cube_record(&mut r)?;
    r.finish()?;
    let cube = ImageCube {
        grid: h.grid,
        component: h.component,
        dt_list: h.dt_list_ns,
        frames,
        pulse: h.pulse,
        seed: h.seed,
    };
    cube.validate()?;
    Ok(cube)
}

/// Timestamped single-frame records sharing one acquisition setup.
#[derive(Debug, Clone, PartialEq)]
pub struct StreamFile {
    pub grid: GridSpec,
    pub component: Component,
    pub dt_mw_ns: f64,
    pub pulse: PulseParams,
    pub seed: Option<u64>,
    pub frames: Vec<StreamFrame>,
}

/// Concatenated RCUB1 records, one frame each.
pub fn encode_stream(stream: &StreamFile) -> Vec<u8> {
    let mut out = Vec::new();
    for f in &stream.frames {
        let header = RcubHeader {
            grid: stream.grid,
            component: stream.component,
            dt_list_ns: vec![stream.dt_mw_ns],
            pulse: stream.pulse,
            seed: stream.seed,
            n_frames: 1,
            timestamp_ms: Some(f.timestamp_ms),
            mw_on: Some(f.mw_on),
        };
        push_record(&mut out, RCUB_MAGIC, &header, f.contrast.data.iter().copied());
    }
    out
}

pub fn decode_stream(bytes: &[u8]) -> Result<StreamFile> {
    let mut r = Reader { bytes, pos: 0 };
    let mut file: Option<StreamFile> = None;
    while !r.at_end() {
        let start = r.pos;
        let (h, mut frames) = read_cube_record(&mut r)?;
        let (Some(timestamp_ms), Some(mw_on), 1) = (h.timestamp_ms, h.mw_on, h.n_frames) else {
            return Err(r.err(start, "stream record needs one frame, timestamp_ms and mw_on"));
        };
        let frame = StreamFrame {
            timestamp_ms,
            mw_on,
            contrast: frames.pop().expect("one frame"),
        };
        match &mut file {
            None => {
                file = Some(StreamFile {
                    grid: h.grid,
                    component: h.component,
                    dt_mw_ns: h.dt_list_ns[0],
                    pulse: h.pulse,
                    seed: h.seed,
                    frames: vec![frame],
                })
            }
            Some(f) => {
                if f.grid != h.grid || f.dt_mw_ns != h.dt_list_ns[0] {
                    return Err(r.err(start, "stream records disagree on grid or dt"));
                }
                f.frames.push(frame);
            }
        }
    }
    file.ok_or_else(|| r.err(0, "empty stream"))
}

/// Linear mapping used for a PGM export: `value = level · per_level`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PgmScale {
    pub max_value: f64,
    pub per_level: f64,
}

/// 16-bit binary P5 image scaled so the maximum maps to 65535. Negative
/// values clip to 0.
pub fn encode_pgm(values: &[f64], nx: usize, ny: usize) -> Result<(Vec<u8>, PgmScale)> {
    if values.len() != nx * ny || values.is_empty() {
        return Err(Error::domain("image size does not match values"));
    }
    if values.iter().any(|v| !v.is_finite()) {
        return Err(Error::domain("cannot export non-finite values"));
    }
    let max_value = values.iter().fold(0.0f64, |m, v| m.max(*v));
    let per_level = if max_value > 0.0 { max_value / 65535.0 } else { 1.0 };
    let mut out = format!("P5\n{nx} {ny}\n65535\n").into_bytes();
    for v in values {
        let level = (v / per_level).round().clamp(0.0, 65535.0) as u16;
        out.extend_from_slice(&level.to_be_bytes());
    }
    Ok((out, PgmScale { max_value, per_level }))
}

/// Two-column text: position in µm, field in µT.
pub fn line_cut_text(positions_m: &[f64], field_t: &[f64]) -> String {
    let mut s = String::from("# position_um field_uT\n");
    for (x, b) in positions_m.iter().zip(field_t) {
        s.push_str(&format!("{:.6} {:.6}\n", x * 1e6, b * 1e6));
    }
    s
}

/// Writes through a sibling temp file and renames it into place.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = path
        .parent()
        .filter(|p| !p.as_os_str().is_empty())
        .unwrap_or(Path::new("."));
    fs::create_dir_all(dir)?;
    let name = path
        .file_name()
        .ok_or_else(|| Error::domain(format!("not a file path: {}", path.display())))?;
    let tmp = dir.join(format!(".{}.tmp{}", name.to_string_lossy(), std::process::id()));
    {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(bytes)?;
        f.sync_all()?;
    }
    fs::rename(&tmp, path)?;
    Ok(())
}
