//! Raw float field files: magic `RFB1`, little-endian `u32` width, height and
//! channel count, then row-major interleaved little-endian `f32` samples.

use std::path::Path;

use crate::error::{Error, Result};
use crate::refraction::DisplacementField;

pub const MAGIC: &[u8; 4] = b"RFB1";
const HEADER_LEN: usize = 16;

#[derive(Debug, Clone, PartialEq)]
pub struct RawField {
    pub width: u32,
    pub height: u32,
    pub channels: u32,
    pub data: Vec<f32>,
}

impl RawField {
    pub fn encode(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(HEADER_LEN + 4 * self.data.len());
        out.extend_from_slice(MAGIC);
        out.extend_from_slice(&self.width.to_le_bytes());
        out.extend_from_slice(&self.height.to_le_bytes());
        out.extend_from_slice(&self.channels.to_le_bytes());
        for v in &self.data {
            out.extend_from_slice(&v.to_le_bytes());
        }
        out
    }

    pub fn decode(bytes: &[u8], path: &Path) -> Result<Self> {
        if bytes.len() < HEADER_LEN || &bytes[..4] != MAGIC {
            return Err(Error::integrity(path, "missing RFB1 header"));
        }
        let word = |i: usize| u32::from_le_bytes(bytes[i..i + 4].try_into().expect("4-byte slice"));
        let (width, height, channels) = (word(4), word(8), word(12));
        let count = width as u64 * height as u64 * channels as u64;
        let expected = HEADER_LEN as u64 + 4 * count;
        if bytes.len() as u64 != expected {
            return Err(Error::integrity(
                path,
                format!("payload is {} bytes, header implies {expected}", bytes.len()),
            ));
        }
        let data = bytes[HEADER_LEN..]
            .chunks_exact(4)
            .map(|c| f32::from_le_bytes(c.try_into().expect("4-byte chunk")))
            .collect();
        Ok(Self {
            width,
            height,
            channels,
            data,
        })
    }

    /// Channels: `dx`, `dy`, and the TIR flag as 0/1.
    pub fn from_displacement(f: &DisplacementField) -> Self {
        let mut data = Vec::with_capacity(3 * f.offsets.len());
        for (o, &t) in f.offsets.iter().zip(&f.tir) {
            data.extend_from_slice(&[o[0], o[1], if t { 1.0 } else { 0.0 }]);
        }
        Self {
            width: f.width as u32,
            height: f.height as u32,
            channels: 3,
            data,
        }
    }

    pub fn to_displacement(&self, frame_index: usize) -> Result<DisplacementField> {
        if self.channels != 3 {
            return Err(Error::Shape(format!("displacement raw field needs 3 channels, got {}", self.channels)));
        }
        let (offsets, tir) = self
            .data
            .chunks_exact(3)
            .map(|c| ([c[0], c[1]], c[2] != 0.0))
            .unzip();
        Ok(DisplacementField {
            width: self.width as usize,
            height: self.height as usize,
            frame_index,
            offsets,
            tir,
        })
    }
}

pub fn write_raw(path: &Path, field: &RawField) -> Result<()> {
    super::io::write_atomic(path, &field.encode())
}

pub fn read_raw(path: &Path) -> Result<RawField> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    RawField::decode(&bytes, path)
}
