//! The 100 Hz estimation-to-command loop.
//!
//! Sensor frames are pushed into a ring buffer holding one receptive field
//! of history. Once it is full, each frame yields a standardized window, a
//! network estimate in Nm/kg, a 7 Hz low-pass filtered estimate and finally
//! a proportional torque command in Nm.

mod controller;
mod engine;
mod frame;
mod ring;
mod session;
mod transport;

pub use controller::{control_command, ControllerConfig, FaultRecovery};
pub use engine::{estimate_step, EngineCounters, Estimate, EstimateScratch, Runtime, StepOutput};
pub use frame::{
    decode_command_stream, CommandFlags, CommandFrame, FrameError, SensorFrame, COMMAND_FRAME_LEN, COMMAND_MAGIC,
    CRC16, FRAME_VERSION, SENSOR_CHANNELS, SENSOR_FRAME_LEN, SENSOR_MAGIC,
};
pub use ring::RingBuffer;
pub use session::{run_loop, CommandStats, Pacing, Percentiles, SessionReport, QUEUE_CAPACITY};
pub use transport::{FrameSink, FrameSource, Received, StreamSink, StreamSource, UdpSink, UdpSource};

use thiserror::Error;

use crate::data::{ChannelLayout, GaitTrial};
use crate::dsp::DspError;
use crate::nn::NnError;

#[derive(Debug, Error)]
pub enum RuntimeError {
    #[error("invalid controller config: {0}")]
    InvalidConfig(String),
    #[error("sensor frames carry {expected} channels but the model takes {model} and the standardizer {standardizer}")]
    ChannelMismatch { expected: usize, model: usize, standardizer: usize },
    #[error("estimate requested before the window is full")]
    WindowNotReady,
    #[error("trial uses the {0:?} layout; streaming needs the 16-channel layout")]
    Layout(ChannelLayout),
    #[error(transparent)]
    Nn(#[from] NnError),
    #[error(transparent)]
    Dsp(#[from] DspError),
    #[error(transparent)]
    Frame(#[from] FrameError),
    #[error("i/o error: {0}")]
    Io(String),
    #[error("{0} thread panicked")]
    ThreadPanic(&'static str),
}

impl RuntimeError {
    pub(crate) fn io(e: std::io::Error) -> Self {
        Self::Io(e.to_string())
    }
}

/// Encodes a 16-channel trial as a 100 Hz frame stream starting at
/// timestamp 0. Values are rounded to f32 as they would be on the wire.
pub fn trial_frames(trial: &GaitTrial) -> Result<Vec<SensorFrame>, RuntimeError> {
    if trial.layout != ChannelLayout::Reduced16 {
        return Err(RuntimeError::Layout(trial.layout));
    }
    let period_us = (1e6 / crate::data::TRIAL_RATE_HZ).round() as u32;
    Ok((0..trial.len())
        .map(|i| {
            let mut ch = [0f32; SENSOR_CHANNELS];
            for (c, v) in ch.iter_mut().enumerate() {
                *v = trial.inputs[c][i] as f32;
            }
            SensorFrame::new(i as u16, i as u32 * period_us, ch)
        })
        .collect())
}

/// Feeds frames straight through the engine on the calling thread.
pub fn replay(runtime: &mut Runtime, frames: &[SensorFrame]) -> Vec<StepOutput> {
    frames.iter().map(|f| runtime.process(f)).collect()
}
