use std::sync::atomic::{AtomicBool, AtomicU64, Ordering};
use std::thread;
use std::time::{Duration, Instant};

use crossbeam_queue::ArrayQueue;
use serde::Serialize;

use super::engine::Runtime;
use super::frame::{CommandFrame, SensorFrame};
use super::transport::{FrameSink, FrameSource, Received};
use super::RuntimeError;

/// Capacity of the ingest and emit queues, in frames.
pub const QUEUE_CAPACITY: usize = 8;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Pacing {
    /// Release frames on their timestamps (replay at the recorded rate).
    Timestamps,
    /// Forward frames as fast as the source delivers them.
    Live,
    /// As fast as possible, blocking instead of dropping on a full queue.
    Lossless,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize)]
pub struct Percentiles {
    pub p50: f64,
    pub p90: f64,
    pub p99: f64,
    pub max: f64,
    pub mean: f64,
}

impl Percentiles {
    /// Nearest-rank percentiles.
    pub fn of(values: &[f64]) -> Self {
        if values.is_empty() {
            return Self::default();
        }
        let mut v = values.to_vec();
        v.sort_by(f64::total_cmp);
        let rank = |p: f64| v[((p / 100.0 * v.len() as f64).ceil() as usize).clamp(1, v.len()) - 1];
        Self {
            p50: rank(50.0),
            p90: rank(90.0),
            p99: rank(99.0),
            max: v[v.len() - 1],
            mean: v.iter().sum::<f64>() / v.len() as f64,
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize)]
pub struct CommandStats {
    pub min_nm: f64,
    pub max_nm: f64,
    pub mean_abs_nm: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct SessionReport {
    pub frames_received: u64,
    pub commands_emitted: u64,
    pub decode_errors: u64,
    /// Frames lost to queue overflow, ingest plus emit side.
    pub dropped_frames: u64,
    /// Frames missing upstream according to sequence numbers.
    pub sequence_gaps: u64,
    /// Frames whose arrival-to-command latency exceeded one frame period.
    pub late_frames: u64,
    pub timing_faults: u64,
    pub nonfinite_inputs: u64,
    pub nonfinite_outputs: u64,
    pub fault_frames: u64,
    pub warmup_frames: u64,
    pub saturated_frames: u64,
    /// Emitted sequence numbers strictly increase (modulo wrap).
    pub monotone_sequence: bool,
    /// Arrival to command ready, microseconds.
    pub latency_us: Percentiles,
    /// Engine time per frame, microseconds.
    pub processing_us: Percentiles,
    pub commands: CommandStats,
    pub duration_s: f64,
}

impl SessionReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

struct Stamped<T> {
    item: T,
    at: Instant,
}

fn push_drop_oldest<T>(q: &ArrayQueue<T>, item: T, dropped: &AtomicU64) {
    if q.force_push(item).is_some() {
        dropped.fetch_add(1, Ordering::Relaxed);
    }
}

/// Runs the ingest, engine and emit stages until the source ends.
///
/// Ingest and emit each get a thread; the engine runs on the caller's
/// thread. Stages talk through bounded queues that drop the oldest frame on
/// overflow, except under [`Pacing::Lossless`].
pub fn run_loop(
    source: &mut (dyn FrameSource + Send),
    sink: &mut (dyn FrameSink + Send),
    runtime: &mut Runtime,
    pacing: Pacing,
) -> Result<SessionReport, RuntimeError> {
    let in_q: ArrayQueue<Stamped<SensorFrame>> = ArrayQueue::new(QUEUE_CAPACITY);
    let out_q: ArrayQueue<CommandFrame> = ArrayQueue::new(QUEUE_CAPACITY);
    let ingest_done = AtomicBool::new(false);
    let engine_done = AtomicBool::new(false);
    let dropped = AtomicU64::new(0);
    let frame_period = Duration::from_secs_f64(1.0 / runtime.config().sample_hz);
    let engine_thread = thread::current();
    let started = Instant::now();

    let mut latency = Vec::new();
    let mut processing = Vec::new();
    let mut late = 0u64;
    let mut last_seq: Option<u16> = None;
    let mut monotone = true;
    let (mut cmin, mut cmax, mut cabs, mut ncmd) = (f64::INFINITY, f64::NEG_INFINITY, 0.0, 0u64);

    let (ingest, emitted) = thread::scope(|s| -> Result<_, RuntimeError> {
        let ingest = s.spawn(|| -> Result<(u64, u64), RuntimeError> {
            let res = (|| {
                let (mut frames, mut corrupt) = (0u64, 0u64);
                let mut clock: Option<(Instant, u32)> = None;
                while let Some(r) = source.recv().map_err(RuntimeError::io)? {
                    let frame = match r {
                        Received::Frame(f) => f,
                        Received::Corrupt(e) => {
                            log::debug!("skipping corrupt input: {e}");
                            corrupt += 1;
                            continue;
                        }
                    };
                    frames += 1;
                    if pacing == Pacing::Timestamps {
                        let (t0, ts0) = *clock.get_or_insert((Instant::now(), frame.timestamp_us));
                        let due = t0 + Duration::from_micros(frame.timestamp_us.wrapping_sub(ts0) as u64);
                        if let Some(wait) = due.checked_duration_since(Instant::now()) {
                            thread::sleep(wait);
                        }
                    }
                    let mut item = Stamped { item: frame, at: Instant::now() };
                    if pacing == Pacing::Lossless {
                        while let Err(back) = in_q.push(item) {
                            item = back;
                            engine_thread.unpark();
                            thread::sleep(Duration::from_micros(50));
                        }
                    } else {
                        push_drop_oldest(&in_q, item, &dropped);
                    }
                    engine_thread.unpark();
                }
                Ok((frames, corrupt))
            })();
            ingest_done.store(true, Ordering::Release);
            engine_thread.unpark();
            res
        });

        let emitter = s.spawn(|| -> Result<u64, RuntimeError> {
            let mut sent = 0u64;
            loop {
                match out_q.pop() {
                    Some(cmd) => {
                        sink.send(&cmd).map_err(RuntimeError::io)?;
                        sent += 1;
                    }
                    None if engine_done.load(Ordering::Acquire) => {
                        if out_q.is_empty() {
                            break;
                        }
                    }
                    None => thread::park_timeout(Duration::from_millis(1)),
                }
            }
            sink.flush().map_err(RuntimeError::io)?;
            Ok(sent)
        });

        loop {
            let Some(Stamped { item: frame, at }) = in_q.pop() else {
                if ingest_done.load(Ordering::Acquire) && in_q.is_empty() {
                    break;
                }
                if ingest.is_finished() && !ingest_done.load(Ordering::Acquire) {
                    break;
                }
                thread::park_timeout(Duration::from_millis(1));
                continue;
            };
            let t = Instant::now();
            let out = runtime.process(&frame);
            let done = Instant::now();
            let cmd = out.command;
            if pacing == Pacing::Lossless {
                let mut c = cmd;
                while let Err(back) = out_q.push(c) {
                    c = back;
                    emitter.thread().unpark();
                    thread::sleep(Duration::from_micros(50));
                }
            } else {
                push_drop_oldest(&out_q, cmd, &dropped);
            }
            emitter.thread().unpark();

            let lat = done.duration_since(at);
            latency.push(lat.as_secs_f64() * 1e6);
            processing.push(done.duration_since(t).as_secs_f64() * 1e6);
            late += (lat > frame_period) as u64;
            if let Some(prev) = last_seq {
                let step = cmd.sequence.wrapping_sub(prev);
                monotone &= step != 0 && step < u16::MAX / 2;
            }
            last_seq = Some(cmd.sequence);
            let tq = cmd.torque_nm as f64;
            cmin = cmin.min(tq);
            cmax = cmax.max(tq);
            cabs += tq.abs();
            ncmd += 1;
        }
        engine_done.store(true, Ordering::Release);
        emitter.thread().unpark();
        let ingest = ingest.join().map_err(|_| RuntimeError::ThreadPanic("ingest"))??;
        let emitted = emitter.join().map_err(|_| RuntimeError::ThreadPanic("emit"))??;
        Ok((ingest, emitted))
    })?;

    let c = runtime.counters();
    Ok(SessionReport {
        frames_received: ingest.0,
        commands_emitted: emitted,
        decode_errors: ingest.1,
        dropped_frames: dropped.load(Ordering::Relaxed),
        sequence_gaps: c.sequence_gaps,
        late_frames: late,
        timing_faults: c.timing_faults,
        nonfinite_inputs: c.nonfinite_inputs,
        nonfinite_outputs: c.nonfinite_outputs,
        fault_frames: c.fault_frames,
        warmup_frames: c.warmup,
        saturated_frames: c.saturated,
        monotone_sequence: monotone,
        latency_us: Percentiles::of(&latency),
        processing_us: Percentiles::of(&processing),
        commands: if ncmd == 0 {
            CommandStats::default()
        } else {
            CommandStats { min_nm: cmin, max_nm: cmax, mean_abs_nm: cabs / ncmd as f64 }
        },
        duration_s: started.elapsed().as_secs_f64(),
    })
}
