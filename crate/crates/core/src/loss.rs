//! Losses for the two heads and EMA-based balancing between them.

use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum LossError {
    #[error("empty batch")]
    EmptyBatch,
    #[error("prediction and target lengths differ ({pred} vs {target})")]
    LengthMismatch { pred: usize, target: usize },
    #[error("target {index} is not a one-hot vector")]
    InvalidOneHot { index: usize },
    #[error("non-finite loss {value} for head {head}")]
    NonFinite { head: usize, value: f64 },
    #[error("EMA of head {head} is {ema:e}, below the division guard")]
    DivisionGuard { head: usize, ema: f64 },
}

const EMA_FLOOR: f64 = 1e-12;

pub fn mse_loss(pred: &[f64], target: &[f64]) -> Result<f64, LossError> {
    check_lengths(pred.len(), target.len())?;
    Ok(pred.iter().zip(target).map(|(p, t)| (p - t) * (p - t)).sum::<f64>() / pred.len() as f64)
}

/// `d mse / d pred_i = 2 (pred_i - target_i) / n`.
pub fn mse_grad(pred: &[f64], target: &[f64]) -> Result<Vec<f64>, LossError> {
    check_lengths(pred.len(), target.len())?;
    let n = pred.len() as f64;
    Ok(pred.iter().zip(target).map(|(p, t)| 2.0 * (p - t) / n).collect())
}

fn check_lengths(pred: usize, target: usize) -> Result<(), LossError> {
    if pred != target {
        return Err(LossError::LengthMismatch { pred, target });
    }
    if pred == 0 {
        return Err(LossError::EmptyBatch);
    }
    Ok(())
}

pub fn softmax(logits: [f64; 2]) -> [f64; 2] {
    let m = logits[0].max(logits[1]);
    let e = [(logits[0] - m).exp(), (logits[1] - m).exp()];
    let s = e[0] + e[1];
    [e[0] / s, e[1] / s]
}

fn true_class(target: &[f64; 2], index: usize) -> Result<usize, LossError> {
    match *target {
        [1.0, 0.0] => Ok(0),
        [0.0, 1.0] => Ok(1),
        _ => Err(LossError::InvalidOneHot { index }),
    }
}

/// One-hot target for a stance label: class 0 is stance, class 1 swing.
pub fn stance_one_hot(stance: bool) -> [f64; 2] {
    if stance {
        [1.0, 0.0]
    } else {
        [0.0, 1.0]
    }
}

/// Mean of `-log softmax(logits)[true class]`, computed as
/// `logsumexp(logits) - logits[true]` with the maximum subtracted first.
pub fn softmax_cross_entropy(logits: &[[f64; 2]], target: &[[f64; 2]]) -> Result<f64, LossError> {
    check_lengths(logits.len(), target.len())?;
    let mut sum = 0.0;
    for (i, (l, t)) in logits.iter().zip(target).enumerate() {
        let c = true_class(t, i)?;
        let m = l[0].max(l[1]);
        let lse = m + ((l[0] - m).exp() + (l[1] - m).exp()).ln();
        sum += lse - l[c];
    }
    Ok(sum / logits.len() as f64)
}

/// `d ce / d logits_i = (softmax(logits_i) - target_i) / n`.
pub fn softmax_cross_entropy_grad(logits: &[[f64; 2]], target: &[[f64; 2]]) -> Result<Vec<[f64; 2]>, LossError> {
    check_lengths(logits.len(), target.len())?;
    let n = logits.len() as f64;
    logits
        .iter()
        .zip(target)
        .enumerate()
        .map(|(i, (l, t))| {
            true_class(t, i)?;
            let p = softmax(*l);
            Ok([(p[0] - t[0]) / n, (p[1] - t[1]) / n])
        })
        .collect()
}

/// Per-head exponential moving averages of the losses.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LossState {
    pub alpha: f64,
    ema: [f64; 2],
    initialized: [bool; 2],
}

impl LossState {
    pub fn new(alpha: f64) -> Result<Self, LossError> {
        if !(alpha > 0.0 && alpha <= 1.0) {
            return Err(LossError::NonFinite { head: 0, value: alpha });
        }
        Ok(Self { alpha, ema: [0.0; 2], initialized: [false; 2] })
    }

    pub fn ema(&self, head: usize) -> Option<f64> {
        self.initialized[head].then_some(self.ema[head])
    }

    /// `ema = alpha * loss + (1 - alpha) * ema`; the first observation
    /// initializes the average.
    pub fn ema_update(&mut self, head: usize, loss: f64) -> Result<f64, LossError> {
        if !loss.is_finite() || loss < 0.0 {
            return Err(LossError::NonFinite { head, value: loss });
        }
        self.ema[head] =
            if self.initialized[head] { self.alpha * loss + (1.0 - self.alpha) * self.ema[head] } else { loss };
        self.initialized[head] = true;
        Ok(self.ema[head])
    }

    /// Loss normalization factors `1 / ema_k`, treated as constants when
    /// differentiating.
    pub fn weights(&self) -> Result<[f64; 2], LossError> {
        let mut w = [0.0; 2];
        for head in 0..2 {
            let ema = self.ema[head];
            if !self.initialized[head] || ema < EMA_FLOOR {
                return Err(LossError::DivisionGuard { head, ema });
            }
            w[head] = 1.0 / ema;
        }
        Ok(w)
    }

    /// Like `weights`, but an average below the guard is clamped to it
    /// instead of failing. Training uses this once a head has become so
    /// confident that its batch loss underflows; its gradient is then
    /// negligible either way.
    pub fn weights_floored(&self) -> [f64; 2] {
        [1.0 / self.ema[0].max(EMA_FLOOR), 1.0 / self.ema[1].max(EMA_FLOOR)]
    }

    /// `l1 / ema_1 + l2 / ema_2`. Call after updating both averages with
    /// this step's losses.
    pub fn balanced_loss(&self, l1: f64, l2: f64) -> Result<f64, LossError> {
        let w = self.weights()?;
        Ok(l1 * w[0] + l2 * w[1])
    }

    /// Updates both averages, then returns the balanced loss and the
    /// per-head weights.
    pub fn step(&mut self, l1: f64, l2: f64) -> Result<(f64, [f64; 2]), LossError> {
        self.ema_update(0, l1)?;
        self.ema_update(1, l2)?;
        Ok((self.balanced_loss(l1, l2)?, self.weights()?))
    }
}

impl Default for LossState {
    fn default() -> Self {
        Self::new(0.9).expect("valid alpha")
    }
}
