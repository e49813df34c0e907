//! Trains a quick model, then streams an unseen trial through the real-time
//! session as encoded frames and reports latency and command statistics.
//!
//! cargo run --release --example runtime_replay

use std::io::Cursor;
use std::sync::Arc;

use ankle_tcn::data::{ingest, synth_generate, GaitTrial, IngestOptions, PopulationSpec};
use ankle_tcn::runtime::{
    decode_command_stream, run_loop, trial_frames, ControllerConfig, Pacing, Runtime, StreamSink, StreamSource,
};
use ankle_tcn::train::{pretrain, TrainConfig};

fn cohort(spec: PopulationSpec, seed: u64) -> Result<Vec<GaitTrial>, Box<dyn std::error::Error>> {
    let raws = synth_generate(&spec, seed)?;
    Ok(raws.iter().map(|r| ingest(r, &IngestOptions::default())).collect::<Result<_, _>>()?)
}

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let train = cohort(PopulationSpec::post_stroke().with_trials(2, 30.0), 5)?;
    let cfg = TrainConfig { pretrain_epochs: 6, ..TrainConfig::desk() };
    let model = Arc::new(pretrain(&train, &cfg)?.trained);

    let unseen = cohort(PopulationSpec { participants: 1, ..PopulationSpec::post_stroke().with_trials(1, 20.0) }, 6)?;
    let trial = &unseen[0];
    let ctrl = ControllerConfig { mass_kg: trial.meta.mass_kg, ..ControllerConfig::default() };
    let mut runtime = Runtime::new(model, ctrl)?;

    let bytes: Vec<u8> = trial_frames(trial)?.iter().flat_map(|f| f.encode()).collect();
    let mut source = StreamSource::new(Cursor::new(bytes));
    let mut sink = StreamSink::new(Vec::new());
    let report = run_loop(&mut source, &mut sink, &mut runtime, Pacing::Lossless)?;
    let commands = decode_command_stream(&sink.into_inner())?;

    let peak = commands.iter().map(|c| c.torque_nm).fold(f32::MIN, f32::max);
    println!("{} frames in, {} commands out, peak assist {peak:.1} Nm", report.frames_received, commands.len());
    println!(
        "processing p50 {:.0} us, p99 {:.0} us; warm-up {} frames, saturated {}",
        report.processing_us.p50, report.processing_us.p99, report.warmup_frames, report.saturated_frames
    );
    Ok(())
}
