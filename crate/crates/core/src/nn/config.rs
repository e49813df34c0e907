use serde::{Deserialize, Serialize};

use super::NnError;

/// Which output heads the network carries.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HeadMode {
    /// Torque regression only.
    SingleOutput,
    /// Torque regression plus a two-class stance/swing head.
    DualOutput,
}

impl HeadMode {
    pub fn is_dual(self) -> bool {
        matches!(self, HeadMode::DualOutput)
    }
}

/// Architecture hyperparameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelConfig {
    pub num_blocks: usize,
    pub channels: usize,
    pub kernel_size: usize,
    /// Dilation of block `i`; always `2^i`.
    pub dilations: Vec<usize>,
    pub input_channels: usize,
    pub dropout: f64,
    pub heads: HeadMode,
}

impl ModelConfig {
    /// Builds a config with dilations `1, 2, 4, ...` and the default
    /// training dropout of 0.1.
    pub fn new(
        num_blocks: usize,
        channels: usize,
        kernel_size: usize,
        input_channels: usize,
        heads: HeadMode,
    ) -> Result<Self, NnError> {
        if num_blocks == 0 || num_blocks > 16 {
            return Err(NnError::InvalidConfig(format!("num_blocks must be in 1..=16, got {num_blocks}")));
        }
        let cfg = Self {
            num_blocks,
            channels,
            kernel_size,
            dilations: (0..num_blocks).map(|i| 1usize << i).collect(),
            input_channels,
            dropout: 0.1,
            heads,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    /// Three blocks of 128 channels with kernel size 5 over 16 inputs.
    pub fn full(heads: HeadMode) -> Self {
        Self::new(3, 128, 5, 16, heads).expect("static config is valid")
    }

    pub fn with_dropout(mut self, p: f64) -> Result<Self, NnError> {
        self.dropout = p;
        self.validate()?;
        Ok(self)
    }

    pub fn validate(&self) -> Result<(), NnError> {
        if self.channels == 0 || self.input_channels == 0 {
            return Err(NnError::InvalidConfig("channel counts must be >= 1".into()));
        }
        if !(0.0..1.0).contains(&self.dropout) {
            return Err(NnError::InvalidConfig(format!("dropout must lie in [0, 1), got {}", self.dropout)));
        }
        if self.dilations.len() != self.num_blocks {
            return Err(NnError::InvalidConfig(format!(
                "{} dilations given for {} blocks",
                self.dilations.len(),
                self.num_blocks
            )));
        }
        for (i, &d) in self.dilations.iter().enumerate() {
            if d != 1usize << i {
                return Err(NnError::InvalidConfig(format!("dilation of block {i} must be {}, got {d}", 1usize << i)));
            }
        }
        receptive_field(self.num_blocks, self.kernel_size, &self.dilations).map(|_| ())
    }

    /// Input window length `h` the network consumes.
    pub fn receptive_field(&self) -> usize {
        receptive_field(self.num_blocks, self.kernel_size, &self.dilations).expect("validated config")
    }
}

/// `h = 1 + sum_i 2 (k - 1) d_i`.
pub fn receptive_field(num_blocks: usize, kernel_size: usize, dilations: &[usize]) -> Result<usize, NnError> {
    if num_blocks < 1 || kernel_size < 1 {
        return Err(NnError::InvalidConfig(format!(
            "num_blocks and kernel_size must be >= 1 (got {num_blocks}, {kernel_size})"
        )));
    }
    if dilations.len() != num_blocks {
        return Err(NnError::InvalidConfig(format!("{} dilations given for {num_blocks} blocks", dilations.len())));
    }
    if let Some(d) = dilations.iter().find(|&&d| d < 1) {
        return Err(NnError::InvalidConfig(format!("dilation {d} < 1")));
    }
    Ok(1 + dilations.iter().map(|d| 2 * (kernel_size - 1) * d).sum::<usize>())
}
