use serde::{Deserialize, Serialize};

use super::TrainError;
use crate::nn::{HeadMode, ModelConfig};

/// Named defaults: `desk` is sized for a single CPU core, `full` is the
/// full 128-channel, 80-epoch setup.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Profile {
    #[default]
    Desk,
    Full,
}

impl std::str::FromStr for Profile {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "desk" => Ok(Profile::Desk),
            "full" => Ok(Profile::Full),
            other => Err(format!("unknown profile '{other}' (expected desk or full)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    pub learning_rate: f64,
    /// Step size when continuing from a pretrained model.
    pub finetune_learning_rate: f64,
    pub batch_size: usize,
    pub pretrain_epochs: usize,
    pub finetune_epochs: usize,
    /// EMA smoothing factor of the loss balancing.
    pub alpha: f64,
    pub seed: u64,
    /// Fraction of each trial (leading time block) used for training; the
    /// rest is validation.
    pub split_ratio: f64,
    pub heads: HeadMode,
    pub num_blocks: usize,
    pub channels: usize,
    pub kernel_size: usize,
    pub dropout: f64,
    pub weight_decay: f64,
    /// Consecutive windows evaluated together; a batch holds
    /// `batch_size / window_chunk` such chunks.
    pub window_chunk: usize,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self::desk()
    }
}

impl TrainConfig {
    pub fn full() -> Self {
        Self {
            learning_rate: 1e-4,
            finetune_learning_rate: 1e-4,
            batch_size: 32,
            pretrain_epochs: 80,
            finetune_epochs: 80,
            alpha: 0.9,
            seed: 0,
            split_ratio: 0.9,
            heads: HeadMode::DualOutput,
            num_blocks: 3,
            channels: 128,
            kernel_size: 5,
            dropout: 0.1,
            weight_decay: 0.01,
            window_chunk: 1,
        }
    }

    pub fn desk() -> Self {
        Self {
            learning_rate: 3e-4,
            finetune_learning_rate: 1e-4,
            channels: 16,
            pretrain_epochs: 40,
            finetune_epochs: 30,
            window_chunk: 16,
            ..Self::full()
        }
    }

    pub fn for_profile(p: Profile) -> Self {
        match p {
            Profile::Desk => Self::desk(),
            Profile::Full => Self::full(),
        }
    }

    pub fn validate(&self) -> Result<(), TrainError> {
        let bad = |m: &str| Err(TrainError::InvalidConfig(m.into()));
        for lr in [self.learning_rate, self.finetune_learning_rate] {
            if !(lr > 0.0 && lr.is_finite()) {
                return bad("learning rates must be > 0");
            }
        }
        if self.batch_size == 0 || self.window_chunk == 0 {
            return bad("batch_size and window_chunk must be >= 1");
        }
        if !(self.split_ratio > 0.0 && self.split_ratio < 1.0) {
            return bad("split_ratio must lie in (0, 1)");
        }
        if !(self.alpha > 0.0 && self.alpha <= 1.0) {
            return bad("alpha must lie in (0, 1]");
        }
        if !(0.0..1.0).contains(&self.dropout) {
            return bad("dropout must lie in [0, 1)");
        }
        if !(self.weight_decay >= 0.0) {
            return bad("weight_decay must be >= 0");
        }
        self.model_config(16)?;
        Ok(())
    }

    pub fn model_config(&self, input_channels: usize) -> Result<ModelConfig, TrainError> {
        Ok(ModelConfig::new(self.num_blocks, self.channels, self.kernel_size, input_channels, self.heads)?
            .with_dropout(self.dropout)?)
    }

    /// Chunks per optimizer step.
    pub fn chunks_per_batch(&self) -> usize {
        self.batch_size.div_ceil(self.window_chunk)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn profiles() {
        let d = TrainConfig::desk();
        assert_eq!((d.channels, d.pretrain_epochs, d.finetune_epochs), (16, 40, 30));
        let p = TrainConfig::full();
        assert_eq!((p.channels, p.pretrain_epochs, p.batch_size, p.learning_rate), (128, 80, 32, 1e-4));
        assert_eq!(p.model_config(16).unwrap().receptive_field(), 57);
        d.validate().unwrap();
        p.validate().unwrap();
    }

    #[test]
    fn rejects_bad_values() {
        assert!(TrainConfig { split_ratio: 1.0, ..TrainConfig::desk() }.validate().is_err());
        assert!(TrainConfig { batch_size: 0, ..TrainConfig::desk() }.validate().is_err());
        assert!(TrainConfig { alpha: 0.0, ..TrainConfig::desk() }.validate().is_err());
    }
}
