//! Trains on all 27 sensor channels and measures how much each sensor
//! group matters by randomizing it on held-out walkers.
//!
//! cargo run --release --example feature_importance

use ankle_tcn::data::{ingest, synth_generate, ChannelGroup, ChannelLayout, GaitTrial, IngestOptions, PopulationSpec};
use ankle_tcn::train::{feature_importance, pretrain, TrainConfig};

fn cohort(spec: PopulationSpec, seed: u64) -> Result<Vec<GaitTrial>, Box<dyn std::error::Error>> {
    let opts = IngestOptions { layout: Some(ChannelLayout::Full27), ..IngestOptions::default() };
    let raws = synth_generate(&spec, seed)?;
    Ok(raws.iter().map(|r| ingest(r, &opts)).collect::<Result<_, _>>()?)
}

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let train = cohort(PopulationSpec::healthy().with_trials(2, 30.0), 71)?;
    let test = cohort(PopulationSpec::healthy().with_trials(1, 40.0), 72)?;
    let cfg = TrainConfig { pretrain_epochs: 12, ..TrainConfig::desk() };
    let model = pretrain(&train, &cfg)?.trained;
    for group in [ChannelGroup::Angles, ChannelGroup::Accelerations, ChannelGroup::Gyros] {
        let r = feature_importance(&model, &test, group, 3)?;
        println!(
            "{group:?}: R² {:.3} -> {:.3} (ΔR² {:+.3}, ΔRMSE {:+.3} Nm/kg)",
            r.baseline.r2, r.randomized.r2, r.delta_r2, r.delta_rmse
        );
    }
    Ok(())
}
