//! Wire frames. Little-endian throughout; the trailing CRC-16/CCITT-FALSE
//! (poly 0x1021, init 0xFFFF, no reflection, no final xor) covers every
//! preceding byte and is itself stored little-endian.
//!
//! ```text
//! SensorFrame (74 bytes)          CommandFrame (19 bytes)
//! 0      magic 0xA5               0      magic 0x5A
//! 1      version                  1      version
//! 2..4   sequence u16             2..4   sequence u16 (echo)
//! 4..8   timestamp_us u32         4..8   timestamp_us u32 (echo)
//! 8..72  16 x f32 channels        8..12  commanded torque f32 (Nm)
//! 72..74 CRC-16                   12..16 raw estimate f32 (Nm/kg)
//!                                 16     flags u8
//!                                 17..19 CRC-16
//! ```

use crc::{Crc, CRC_16_IBM_3740};
use thiserror::Error;

pub const SENSOR_MAGIC: u8 = 0xA5;
pub const COMMAND_MAGIC: u8 = 0x5A;
pub const FRAME_VERSION: u8 = 1;
pub const SENSOR_CHANNELS: usize = 16;
pub const SENSOR_FRAME_LEN: usize = 8 + 4 * SENSOR_CHANNELS + 2;
pub const COMMAND_FRAME_LEN: usize = 8 + 4 + 4 + 1 + 2;

/// CRC-16/CCITT-FALSE, catalogued as CRC-16/IBM-3740.
pub const CRC16: Crc<u16> = Crc::<u16>::new(&CRC_16_IBM_3740);

#[derive(Debug, Error, Clone, Copy, PartialEq, Eq)]
pub enum FrameError {
    #[error("frame truncated: {got} of {expected} bytes")]
    Truncated { expected: usize, got: usize },
    #[error("frame has {got} bytes, expected exactly {expected}")]
    TrailingBytes { expected: usize, got: usize },
    #[error("CRC mismatch: stored {stored:#06x}, computed {computed:#06x}")]
    CrcMismatch { stored: u16, computed: u16 },
    #[error("bad magic byte {0:#04x}")]
    BadMagic(u8),
    #[error("unsupported frame version {0}")]
    UnsupportedVersion(u8),
}

/// Command flag bits.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Hash)]
pub struct CommandFlags(pub u8);

impl CommandFlags {
    pub const SATURATED: u8 = 1 << 0;
    pub const FAULT: u8 = 1 << 1;
    pub const WARMUP: u8 = 1 << 2;

    pub fn saturated(self) -> bool {
        self.0 & Self::SATURATED != 0
    }
    pub fn fault(self) -> bool {
        self.0 & Self::FAULT != 0
    }
    pub fn warmup(self) -> bool {
        self.0 & Self::WARMUP != 0
    }
    pub fn set(&mut self, bit: u8, on: bool) {
        if on {
            self.0 |= bit;
        } else {
            self.0 &= !bit;
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SensorFrame {
    pub version: u8,
    pub sequence: u16,
    pub timestamp_us: u32,
    pub channels: [f32; SENSOR_CHANNELS],
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CommandFrame {
    pub version: u8,
    pub sequence: u16,
    pub timestamp_us: u32,
    pub torque_nm: f32,
    pub estimate_nmkg: f32,
    pub flags: CommandFlags,
}

/// Length, then CRC, then magic and version. Checking the CRC first means
/// any corruption of a well-sized frame, including its magic byte, is
/// reported as a CRC failure.
fn check(bytes: &[u8], len: usize, magic: u8) -> Result<(), FrameError> {
    if bytes.len() < len {
        return Err(FrameError::Truncated { expected: len, got: bytes.len() });
    }
    if bytes.len() > len {
        return Err(FrameError::TrailingBytes { expected: len, got: bytes.len() });
    }
    let stored = u16::from_le_bytes([bytes[len - 2], bytes[len - 1]]);
    let computed = CRC16.checksum(&bytes[..len - 2]);
    if stored != computed {
        return Err(FrameError::CrcMismatch { stored, computed });
    }
    if bytes[0] != magic {
        return Err(FrameError::BadMagic(bytes[0]));
    }
    if bytes[1] != FRAME_VERSION {
        return Err(FrameError::UnsupportedVersion(bytes[1]));
    }
    Ok(())
}

fn f32_at(b: &[u8], i: usize) -> f32 {
    f32::from_le_bytes([b[i], b[i + 1], b[i + 2], b[i + 3]])
}

fn seal(out: &mut Vec<u8>) {
    let crc = CRC16.checksum(out);
    out.extend_from_slice(&crc.to_le_bytes());
}

impl SensorFrame {
    pub fn new(sequence: u16, timestamp_us: u32, channels: [f32; SENSOR_CHANNELS]) -> Self {
        Self { version: FRAME_VERSION, sequence, timestamp_us, channels }
    }

    pub fn encode(&self) -> [u8; SENSOR_FRAME_LEN] {
        let mut v = Vec::with_capacity(SENSOR_FRAME_LEN);
        v.push(SENSOR_MAGIC);
        v.push(self.version);
        v.extend_from_slice(&self.sequence.to_le_bytes());
        v.extend_from_slice(&self.timestamp_us.to_le_bytes());
        for c in &self.channels {
            v.extend_from_slice(&c.to_le_bytes());
        }
        seal(&mut v);
        v.try_into().expect("sensor frame length")
    }

    pub fn decode(bytes: &[u8]) -> Result<Self, FrameError> {
        check(bytes, SENSOR_FRAME_LEN, SENSOR_MAGIC)?;
        let mut channels = [0f32; SENSOR_CHANNELS];
        for (i, c) in channels.iter_mut().enumerate() {
            *c = f32_at(bytes, 8 + 4 * i);
        }
        Ok(Self {
            version: bytes[1],
            sequence: u16::from_le_bytes([bytes[2], bytes[3]]),
            timestamp_us: u32::from_le_bytes([bytes[4], bytes[5], bytes[6], bytes[7]]),
            channels,
        })
    }
}

impl CommandFrame {
    pub fn encode(&self) -> [u8; COMMAND_FRAME_LEN] {
        let mut v = Vec::with_capacity(COMMAND_FRAME_LEN);
        v.push(COMMAND_MAGIC);
        v.push(self.version);
        v.extend_from_slice(&self.sequence.to_le_bytes());
        v.extend_from_slice(&self.timestamp_us.to_le_bytes());
        v.extend_from_slice(&self.torque_nm.to_le_bytes());
        v.extend_from_slice(&self.estimate_nmkg.to_le_bytes());
        v.push(self.flags.0);
        seal(&mut v);
        v.try_into().expect("command frame length")
    }

    pub fn decode(bytes: &[u8]) -> Result<Self, FrameError> {
        check(bytes, COMMAND_FRAME_LEN, COMMAND_MAGIC)?;
        Ok(Self {
            version: bytes[1],
            sequence: u16::from_le_bytes([bytes[2], bytes[3]]),
            timestamp_us: u32::from_le_bytes([bytes[4], bytes[5], bytes[6], bytes[7]]),
            torque_nm: f32_at(bytes, 8),
            estimate_nmkg: f32_at(bytes, 12),
            flags: CommandFlags(bytes[16]),
        })
    }
}

/// Decodes a buffer of back-to-back command frames.
pub fn decode_command_stream(bytes: &[u8]) -> Result<Vec<CommandFrame>, FrameError> {
    if bytes.len() % COMMAND_FRAME_LEN != 0 {
        return Err(FrameError::Truncated {
            expected: bytes.len().div_ceil(COMMAND_FRAME_LEN) * COMMAND_FRAME_LEN,
            got: bytes.len(),
        });
    }
    bytes.chunks_exact(COMMAND_FRAME_LEN).map(CommandFrame::decode).collect()
}
