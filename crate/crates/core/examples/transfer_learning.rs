//! Pretrains on synthetic healthy walkers, then compares fine-tuning
//! against training from scratch on post-stroke walkers with
//! leave-one-participant-out folds.
//!
//! cargo run --release --example transfer_learning -- [seed]

use ankle_tcn::data::{ingest, synth_generate, GaitTrial, IngestOptions, PopulationSpec};
use ankle_tcn::train::{loocv, pretrain, TrainConfig};

fn cohort(spec: PopulationSpec, seed: u64) -> Result<Vec<GaitTrial>, Box<dyn std::error::Error>> {
    let raws = synth_generate(&spec, seed)?;
    Ok(raws.iter().map(|r| ingest(r, &IngestOptions::default())).collect::<Result<_, _>>()?)
}

fn main() -> Result<(), Box<dyn std::error::Error>> {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let seed = std::env::args().nth(1).map_or(Ok(1), |s| s.parse())?;
    let healthy = cohort(PopulationSpec::healthy().with_trials(2, 40.0), seed)?;
    let impaired = cohort(PopulationSpec::post_stroke().with_trials(3, 25.0), seed + 100)?;
    let cfg = TrainConfig { seed, ..TrainConfig::desk() };

    let pre = pretrain(&healthy, &cfg)?;
    println!("pretrained: best epoch {}, val torque mse {:.4}", pre.best_epoch, pre.best_val_torque_mse);

    let tuned = loocv(&impaired, &cfg, Some(&pre.trained.model))?;
    let scratch = loocv(&impaired, &cfg, None)?;
    for (name, report) in [("fine-tuned", &tuned), ("impaired only", &scratch)] {
        let folds: Vec<String> =
            report.folds.iter().map(|f| format!("{} {:.3}", f.test_participant, f.metrics.r2)).collect();
        println!("{name}: fold R² {}\n{}", folds.join(", "), report.summary_table());
    }
    Ok(())
}
