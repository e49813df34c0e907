//! Model file format.
//!
//! All integers and floats are little-endian.
//!
//! ```text
//! offset  size        field
//! 0       4           magic "ATCN"
//! 4       2           format version (u16, currently 1)
//! 6       1           heads: 0 = single output, 1 = dual output
//! 7       1           reserved, 0
//! 8       4           num_blocks l (u32)
//! 12      4           channels (u32)
//! 16      4           kernel_size k (u32)
//! 20      4           input_channels (u32)
//! 24      8           dropout (f64)
//! 32      4*l         dilations (u32 each)
//! ..      8           parameter count n (u64)
//! ..      4*n         parameters (f32), in `ParamLayout` order
//! ..      1           standardizer present (0/1)
//! ..      4           channel count c (u32)          } only when present
//! ..      8*c, 8*c    means, then stds (f64 each)    }
//! ..      8           CRC-64/XZ of every preceding byte (u64)
//! ```

use std::fs;
use std::path::Path;

use crc::{Crc, CRC_64_XZ};
use thiserror::Error;

use super::{HeadMode, ModelConfig, NnError, TcnModel};
use crate::data::Standardizer;

pub const MAGIC: &[u8; 4] = b"ATCN";
pub const FORMAT_VERSION: u16 = 1;

const CHECKSUM: Crc<u64> = Crc::<u64>::new(&CRC_64_XZ);

#[derive(Debug, Error)]
pub enum ModelFileError {
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("not a model file (bad magic)")]
    BadMagic,
    #[error("unsupported model format version {0} (supported: {FORMAT_VERSION})")]
    UnsupportedVersion(u16),
    #[error("model file is corrupt: checksum mismatch (stored {stored:#018x}, computed {computed:#018x})")]
    ChecksumMismatch { stored: u64, computed: u64 },
    #[error("model file truncated")]
    Truncated,
    #[error("invalid model contents: {0}")]
    Invalid(#[from] NnError),
    #[error("invalid standardizer: {0}")]
    Standardizer(String),
}

/// A model together with the input standardization it was trained with.
#[derive(Debug, Clone, PartialEq)]
pub struct Checkpoint {
    pub model: TcnModel,
    pub standardizer: Option<Standardizer>,
}

pub fn encode(model: &TcnModel, standardizer: Option<&Standardizer>) -> Vec<u8> {
    let cfg = model.config();
    let mut out = Vec::with_capacity(64 + 4 * model.num_params());
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&FORMAT_VERSION.to_le_bytes());
    out.push(match cfg.heads {
        HeadMode::SingleOutput => 0,
        HeadMode::DualOutput => 1,
    });
    out.push(0);
    for v in [cfg.num_blocks, cfg.channels, cfg.kernel_size, cfg.input_channels] {
        out.extend_from_slice(&(v as u32).to_le_bytes());
    }
    out.extend_from_slice(&cfg.dropout.to_le_bytes());
    for &d in &cfg.dilations {
        out.extend_from_slice(&(d as u32).to_le_bytes());
    }
    out.extend_from_slice(&(model.num_params() as u64).to_le_bytes());
    for &p in model.params() {
        out.extend_from_slice(&(p as f32).to_le_bytes());
    }
    match standardizer {
        Some(s) => {
            out.push(1);
            out.extend_from_slice(&(s.mean.len() as u32).to_le_bytes());
            for v in s.mean.iter().chain(&s.std) {
                out.extend_from_slice(&v.to_le_bytes());
            }
        }
        None => out.push(0),
    }
    let sum = CHECKSUM.checksum(&out);
    out.extend_from_slice(&sum.to_le_bytes());
    out
}

struct Reader<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8], ModelFileError> {
        let end = self.pos.checked_add(n).ok_or(ModelFileError::Truncated)?;
        let s = self.buf.get(self.pos..end).ok_or(ModelFileError::Truncated)?;
        self.pos = end;
        Ok(s)
    }
    fn u8(&mut self) -> Result<u8, ModelFileError> {
        Ok(self.take(1)?[0])
    }
    fn u32(&mut self) -> Result<u32, ModelFileError> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }
    fn u64(&mut self) -> Result<u64, ModelFileError> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }
    fn f64(&mut self) -> Result<f64, ModelFileError> {
        Ok(f64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }
}

pub fn decode(bytes: &[u8]) -> Result<Checkpoint, ModelFileError> {
    if bytes.len() < 6 {
        return if bytes.len() >= 4 && &bytes[..4] != MAGIC {
            Err(ModelFileError::BadMagic)
        } else {
            Err(ModelFileError::Truncated)
        };
    }
    if &bytes[..4] != MAGIC {
        return Err(ModelFileError::BadMagic);
    }
    let version = u16::from_le_bytes([bytes[4], bytes[5]]);
    if version != FORMAT_VERSION {
        return Err(ModelFileError::UnsupportedVersion(version));
    }
    if bytes.len() < 14 {
        return Err(ModelFileError::Truncated);
    }
    let (body, tail) = bytes.split_at(bytes.len() - 8);
    let stored = u64::from_le_bytes(tail.try_into().unwrap());
    let computed = CHECKSUM.checksum(body);
    if stored != computed {
        return Err(ModelFileError::ChecksumMismatch { stored, computed });
    }

    let mut r = Reader { buf: body, pos: 6 };
    let heads = match r.u8()? {
        0 => HeadMode::SingleOutput,
        1 => HeadMode::DualOutput,
        other => return Err(NnError::InvalidConfig(format!("unknown head mode {other}")).into()),
    };
    let _reserved = r.u8()?;
    let num_blocks = r.u32()? as usize;
    let channels = r.u32()? as usize;
    let kernel_size = r.u32()? as usize;
    let input_channels = r.u32()? as usize;
    let dropout = r.f64()?;
    if num_blocks > 16 {
        return Err(NnError::InvalidConfig(format!("{num_blocks} blocks")).into());
    }
    let dilations = (0..num_blocks).map(|_| r.u32().map(|d| d as usize)).collect::<Result<Vec<_>, _>>()?;
    let config = ModelConfig { num_blocks, channels, kernel_size, dilations, input_channels, dropout, heads };
    config.validate()?;
    let n = r.u64()? as usize;
    let blob = r.take(n.checked_mul(4).ok_or(ModelFileError::Truncated)?)?;
    let params = blob.chunks_exact(4).map(|c| f32::from_le_bytes(c.try_into().unwrap()) as f64).collect();
    let model = TcnModel::from_params(config, params)?;
    let standardizer = match r.u8()? {
        0 => None,
        1 => {
            let c = r.u32()? as usize;
            let mean = (0..c).map(|_| r.f64()).collect::<Result<Vec<_>, _>>()?;
            let std = (0..c).map(|_| r.f64()).collect::<Result<Vec<_>, _>>()?;
            Some(Standardizer::from_parts(mean, std).map_err(|e| ModelFileError::Standardizer(e.to_string()))?)
        }
        other => return Err(ModelFileError::Standardizer(format!("bad presence flag {other}"))),
    };
    if r.pos != body.len() {
        return Err(NnError::ShapeMismatch("trailing bytes after model payload".into()).into());
    }
    Ok(Checkpoint { model, standardizer })
}

pub fn model_save(
    model: &TcnModel,
    standardizer: Option<&Standardizer>,
    path: impl AsRef<Path>,
) -> Result<(), ModelFileError> {
    fs::write(path, encode(model, standardizer))?;
    Ok(())
}

pub fn model_load(path: impl AsRef<Path>) -> Result<Checkpoint, ModelFileError> {
    decode(&fs::read(path)?)
}
