use std::sync::Arc;

use rand_chacha::ChaCha8Rng;

use super::controller::{control_command, ControllerConfig, FaultRecovery};
use super::frame::{CommandFlags, CommandFrame, SensorFrame, FRAME_VERSION, SENSOR_CHANNELS};
use super::ring::RingBuffer;
use super::RuntimeError;
use crate::data::Standardizer;
use crate::dsp::{butter2_design, Biquad};
use crate::loss::softmax;
use crate::nn::{ForwardCache, Mat, StreamState, TcnModel, TcnOutput};
use crate::train::TrainedModel;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Estimate {
    /// Raw torque estimate, Nm/kg.
    pub torque_nmkg: f64,
    /// Stance probability (dual-output models only).
    pub stance_prob: Option<f64>,
}

/// Scratch space reused by [`estimate_step`].
#[derive(Debug, Clone, Default)]
pub struct EstimateScratch {
    window: Mat,
    cache: ForwardCache,
}

/// Standardizes the buffered window and runs the network on it.
/// Returns `None` for a non-finite output. [`Runtime`] computes the same
/// estimate incrementally; this is the windowed form.
pub fn estimate_step(
    model: &TcnModel,
    standardizer: &Standardizer,
    ring: &RingBuffer,
    scratch: &mut EstimateScratch,
) -> Result<Option<Estimate>, RuntimeError> {
    let h = model.receptive_field();
    if !ring.is_ready() || ring.capacity() != h {
        return Err(RuntimeError::WindowNotReady);
    }
    let channels = ring.channels();
    scratch.window.reset(channels, h);
    for c in 0..channels {
        let row = scratch.window.row_mut(c);
        for (dst, &x) in row.iter_mut().zip(ring.channel(c)) {
            *dst = standardizer.apply_value(c, x);
        }
    }
    let out = model.forward_cached(&scratch.window, &mut scratch.cache, None::<&mut ChaCha8Rng>)?;
    Ok(finite_estimate(out))
}

fn finite_estimate(out: TcnOutput) -> Option<Estimate> {
    let stance_prob = out.stance_logits.map(|l| softmax(l)[0]);
    if !out.torque.is_finite() || stance_prob.is_some_and(|p| !p.is_finite()) {
        return None;
    }
    Some(Estimate { torque_nmkg: out.torque, stance_prob })
}

/// Everything the engine decided for one frame.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepOutput {
    pub command: CommandFrame,
    /// Raw estimate, when one was produced.
    pub estimate: Option<Estimate>,
    /// Low-pass filtered estimate, Nm/kg.
    pub filtered_nmkg: Option<f64>,
}

/// Per-session counters kept by the engine.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct EngineCounters {
    pub frames: u64,
    /// Frames missing according to sequence numbers.
    pub sequence_gaps: u64,
    /// Timestamp gaps above the timeout.
    pub timing_faults: u64,
    pub nonfinite_inputs: u64,
    pub nonfinite_outputs: u64,
    pub estimates: u64,
    pub saturated: u64,
    pub warmup: u64,
    pub fault_frames: u64,
}

/// Frame-by-frame estimation and command generation.
///
/// Deterministic: equal frame streams give equal command streams, and each
/// command depends only on frames up to its own.
#[derive(Debug, Clone)]
pub struct Runtime {
    model: Arc<TrainedModel>,
    cfg: ControllerConfig,
    filter: Biquad,
    stream: StreamState,
    sample: Vec<f64>,
    last: Option<(u16, u32)>,
    /// Estimates produced since the window last (re)filled.
    since_ready: u64,
    /// Set by a gap or a bad frame until the window has refilled.
    holding: bool,
    latched: bool,
    counters: EngineCounters,
}

impl Runtime {
    pub fn new(model: Arc<TrainedModel>, cfg: ControllerConfig) -> Result<Self, RuntimeError> {
        cfg.validate()?;
        let inputs = model.model.config().input_channels;
        if inputs != SENSOR_CHANNELS || model.standardizer.num_channels() != SENSOR_CHANNELS {
            return Err(RuntimeError::ChannelMismatch {
                expected: SENSOR_CHANNELS,
                model: inputs,
                standardizer: model.standardizer.num_channels(),
            });
        }
        let filter = butter2_design(cfg.filter_cutoff_hz, cfg.sample_hz)?;
        let stream = StreamState::new(&model.model);
        Ok(Self {
            model,
            cfg,
            filter,
            stream,
            sample: vec![0.0; SENSOR_CHANNELS],
            last: None,
            since_ready: 0,
            holding: false,
            latched: false,
            counters: EngineCounters::default(),
        })
    }

    pub fn config(&self) -> &ControllerConfig {
        &self.cfg
    }

    pub fn receptive_field(&self) -> usize {
        self.model.model.receptive_field()
    }

    pub fn counters(&self) -> &EngineCounters {
        &self.counters
    }

    fn restart(&mut self) {
        self.stream.reset();
        self.filter.reset();
        self.since_ready = 0;
        self.holding = true;
        if self.cfg.fault_recovery == FaultRecovery::Latch {
            self.latched = true;
        }
    }

    pub fn process(&mut self, frame: &SensorFrame) -> StepOutput {
        self.counters.frames += 1;
        if let Some((seq, ts)) = self.last {
            let missing = frame.sequence.wrapping_sub(seq).wrapping_sub(1);
            // Large wrapping values are reorders or repeats, not gaps.
            if missing < u16::MAX / 2 {
                self.counters.sequence_gaps += missing as u64;
            }
            let dt_ms = frame.timestamp_us.wrapping_sub(ts) as f64 / 1000.0;
            if dt_ms > self.cfg.gap_timeout_ms {
                log::warn!("input gap of {dt_ms:.1} ms before sequence {}: holding", frame.sequence);
                self.counters.timing_faults += 1;
                self.restart();
            }
        }
        self.last = Some((frame.sequence, frame.timestamp_us));

        let mut estimate = None;
        let mut filtered = None;
        let mut fault;
        if frame.channels.iter().all(|v| v.is_finite()) {
            for (c, (dst, &v)) in self.sample.iter_mut().zip(&frame.channels).enumerate() {
                *dst = self.model.standardizer.apply_value(c, v as f64);
            }
            let out = self.stream.push(&self.model.model, &self.sample);
            let ready = matches!(out, Ok(Some(_)));
            if ready {
                self.holding = false;
            }
            fault = self.holding || self.latched;
            match out {
                Ok(None) => {}
                Ok(Some(o)) => match finite_estimate(o) {
                    Some(e) => {
                        estimate = Some(e);
                        self.counters.estimates += 1;
                        filtered = self.filter.step(e.torque_nmkg);
                        self.since_ready += 1;
                    }
                    None => {
                        self.counters.nonfinite_outputs += 1;
                        fault = true;
                    }
                },
                Err(_) => {
                    self.counters.nonfinite_outputs += 1;
                    fault = true;
                }
            }
        } else {
            self.counters.nonfinite_inputs += 1;
            self.restart();
            fault = true;
        }

        let ramp = self.cfg.ramp_factor(self.since_ready);
        let (torque, mut flags) = match filtered {
            Some(y) => control_command(y, &self.cfg, ramp, fault),
            None => {
                let mut f = CommandFlags::default();
                f.set(CommandFlags::FAULT, fault);
                (0.0, f)
            }
        };
        flags.set(CommandFlags::WARMUP, !fault && (filtered.is_none() || ramp < 1.0));
        self.counters.saturated += flags.saturated() as u64;
        self.counters.warmup += flags.warmup() as u64;
        self.counters.fault_frames += flags.fault() as u64;
        StepOutput {
            command: CommandFrame {
                version: FRAME_VERSION,
                sequence: frame.sequence,
                timestamp_us: frame.timestamp_us,
                torque_nm: torque as f32,
                estimate_nmkg: estimate.map_or(0.0, |e| e.torque_nmkg as f32),
                flags,
            },
            estimate,
            filtered_nmkg: filtered,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nn::{HeadMode, ModelConfig};

    fn tiny(zero: bool) -> Arc<TrainedModel> {
        let cfg = ModelConfig::new(2, 8, 3, 16, HeadMode::DualOutput).unwrap();
        let model = if zero { TcnModel::zeros(cfg).unwrap() } else { TcnModel::init(cfg, 3).unwrap() };
        let standardizer = Standardizer::from_parts(vec![0.0; 16], vec![1.0; 16]).unwrap();
        Arc::new(TrainedModel { model, standardizer })
    }

    fn frame(i: u32) -> SensorFrame {
        let mut ch = [0f32; 16];
        for (c, v) in ch.iter_mut().enumerate() {
            *v = ((i as f32) * 0.07 + c as f32).sin();
        }
        SensorFrame::new(i as u16, i * 10_000, ch)
    }

    #[test]
    fn zero_model_estimates_zero() {
        let m = tiny(true);
        let mut rt = Runtime::new(m.clone(), ControllerConfig::default()).unwrap();
        let h = rt.receptive_field() as u32;
        for i in 0..h - 1 {
            let out = rt.process(&frame(i));
            assert!(out.estimate.is_none() && out.command.flags.warmup() && !out.command.flags.fault());
        }
        let out = rt.process(&frame(h - 1));
        assert_eq!(out.estimate.unwrap().torque_nmkg, 0.0);
        assert_eq!(out.estimate.unwrap().stance_prob, Some(0.5));
    }

    #[test]
    fn gap_holds_then_recovers_after_full_window() {
        let mut rt = Runtime::new(tiny(false), ControllerConfig { ramp_in_s: 0.0, ..Default::default() }).unwrap();
        let h = rt.receptive_field() as u32;
        for i in 0..100 {
            rt.process(&frame(i));
        }
        // 200 ms without frames.
        let mut post = 0;
        for i in 120..300 {
            post += 1;
            let out = rt.process(&frame(i));
            if post < h {
                assert!(out.command.flags.fault(), "frame {post}");
                assert_eq!(out.command.torque_nm, 0.0);
            } else {
                assert!(!out.command.flags.fault(), "frame {post}");
            }
        }
        assert_eq!(rt.counters().timing_faults, 1);
        assert_eq!(rt.counters().sequence_gaps, 20);
    }

    #[test]
    fn latch_never_recovers() {
        let cfg = ControllerConfig { fault_recovery: FaultRecovery::Latch, ..Default::default() };
        let mut rt = Runtime::new(tiny(false), cfg).unwrap();
        for i in (0..60).chain(100..300) {
            rt.process(&frame(i));
        }
        let out = rt.process(&frame(300));
        assert!(out.command.flags.fault() && out.command.torque_nm == 0.0);
    }

    #[test]
    fn nan_input_faults() {
        let mut rt = Runtime::new(tiny(false), ControllerConfig::default()).unwrap();
        for i in 0..80 {
            rt.process(&frame(i));
        }
        let mut bad = frame(80);
        bad.channels[3] = f32::NAN;
        let out = rt.process(&bad);
        assert!(out.command.flags.fault());
        assert_eq!(rt.counters().nonfinite_inputs, 1);
        assert!(rt.process(&frame(81)).command.flags.fault());
    }

    #[test]
    fn streaming_matches_windowed_estimate() {
        let m = tiny(false);
        let mut rt = Runtime::new(m.clone(), ControllerConfig::default()).unwrap();
        let mut ring = RingBuffer::new(16, m.model.receptive_field());
        let mut scratch = EstimateScratch::default();
        let mut compared = 0;
        for i in 0..200 {
            let f = frame(i);
            let got = rt.process(&f).estimate;
            let sample: Vec<f64> = f.channels.iter().map(|&v| v as f64).collect();
            if ring.push(&sample) {
                let want = estimate_step(&m.model, &m.standardizer, &ring, &mut scratch).unwrap();
                assert_eq!(got, want, "frame {i}");
                compared += 1;
            } else {
                assert!(got.is_none());
            }
        }
        assert!(compared > 100);
    }

    #[test]
    fn deterministic() {
        let run = || {
            let mut rt = Runtime::new(tiny(false), ControllerConfig::default()).unwrap();
            (0..400).map(|i| rt.process(&frame(i)).command.encode()).collect::<Vec<_>>()
        };
        assert_eq!(run(), run());
    }

    #[test]
    fn rejects_wrong_channel_count() {
        let cfg = ModelConfig::new(2, 8, 3, 27, HeadMode::SingleOutput).unwrap();
        let model = TcnModel::zeros(cfg).unwrap();
        let standardizer = Standardizer::from_parts(vec![0.0; 27], vec![1.0; 27]).unwrap();
        let r = Runtime::new(Arc::new(TrainedModel { model, standardizer }), ControllerConfig::default());
        assert!(matches!(r, Err(RuntimeError::ChannelMismatch { .. })));
    }
}
