use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::predict::{evaluate, Predictor};
use super::TrainError;
use crate::data::{ChannelGroup, ChannelLayout, GaitTrial};
use crate::metrics::RegressionMetrics;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ImportanceResult {
    pub group: ChannelGroup,
    pub baseline: RegressionMetrics,
    pub randomized: RegressionMetrics,
    /// Randomized minus baseline.
    pub delta_mae: f64,
    pub delta_rmse: f64,
    pub delta_r2: f64,
}

/// Copies of `trials` where every channel of `group` is independently
/// permuted across time.
pub fn permute_group(trials: &[GaitTrial], group: ChannelGroup, seed: u64) -> Result<Vec<GaitTrial>, TrainError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    trials
        .iter()
        .map(|t| {
            if t.layout != ChannelLayout::Full27 {
                return Err(TrainError::ArchitectureMismatch(
                    "feature importance needs trials with the full 27-channel layout".into(),
                ));
            }
            let mut t = t.clone();
            for c in t.layout.group_indices(group) {
                t.inputs[c].shuffle(&mut rng);
            }
            Ok(t)
        })
        .collect()
}

pub fn feature_importance(
    predictor: &dyn Predictor,
    trials: &[GaitTrial],
    group: ChannelGroup,
    seed: u64,
) -> Result<ImportanceResult, TrainError> {
    let baseline = evaluate(predictor, trials)?.regression()?;
    let randomized = evaluate(predictor, &permute_group(trials, group, seed)?)?.regression()?;
    Ok(ImportanceResult {
        group,
        baseline,
        randomized,
        delta_mae: randomized.mae.0 - baseline.mae.0,
        delta_rmse: randomized.rmse.0 - baseline.rmse.0,
        delta_r2: randomized.r2 - baseline.r2,
    })
}
