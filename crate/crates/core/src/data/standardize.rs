use serde::{Deserialize, Serialize};

use super::{DataError, GaitTrial};
use crate::nn::Mat;

/// Smallest standard deviation used for scaling; degenerate channels are
/// floored to this value.
pub const STD_FLOOR: f64 = 1e-8;

/// Per-channel z-scoring statistics fitted on training data.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Standardizer {
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
}

impl Standardizer {
    pub fn from_parts(mean: Vec<f64>, std: Vec<f64>) -> Result<Self, DataError> {
        if mean.len() != std.len() || mean.is_empty() {
            return Err(DataError::Invalid(format!(
                "standardizer needs equal, non-empty mean/std (got {} and {})",
                mean.len(),
                std.len()
            )));
        }
        if mean.iter().any(|m| !m.is_finite()) || std.iter().any(|s| !(s.is_finite() && *s >= STD_FLOOR)) {
            return Err(DataError::Invalid("standardizer statistics must be finite, std >= floor".into()));
        }
        Ok(Self { mean, std })
    }

    pub fn num_channels(&self) -> usize {
        self.mean.len()
    }

    #[inline]
    pub fn apply_value(&self, channel: usize, x: f64) -> f64 {
        (x - self.mean[channel]) / self.std[channel]
    }

    #[inline]
    pub fn invert_value(&self, channel: usize, z: f64) -> f64 {
        z * self.std[channel] + self.mean[channel]
    }

    /// Standardizes a channel-major matrix in place.
    pub fn apply_mat(&self, m: &mut Mat) -> Result<(), DataError> {
        self.check(m.rows())?;
        for c in 0..m.rows() {
            let (mu, sd) = (self.mean[c], self.std[c]);
            for v in m.row_mut(c) {
                *v = (*v - mu) / sd;
            }
        }
        Ok(())
    }

    fn check(&self, channels: usize) -> Result<(), DataError> {
        if channels != self.mean.len() {
            return Err(DataError::Invalid(format!(
                "standardizer has {} channels, data has {channels}",
                self.mean.len()
            )));
        }
        Ok(())
    }
}

/// Fits per-channel mean and population standard deviation over every
/// sample of the given trials. Only training participants should be passed.
pub fn fit_standardizer(trials: &[&GaitTrial]) -> Result<Standardizer, DataError> {
    let first = trials.first().ok_or_else(|| DataError::Invalid("cannot fit a standardizer on zero trials".into()))?;
    let n_ch = first.num_channels();
    let mut sum = vec![0.0; n_ch];
    let mut count = 0usize;
    for t in trials {
        if t.num_channels() != n_ch {
            return Err(DataError::Invalid("trials disagree on channel layout".into()));
        }
        for (c, s) in sum.iter_mut().enumerate() {
            *s += t.inputs[c].iter().sum::<f64>();
        }
        count += t.len();
    }
    if count == 0 {
        return Err(DataError::Invalid("training trials are empty".into()));
    }
    let mean: Vec<f64> = sum.iter().map(|s| s / count as f64).collect();
    let mut sq = vec![0.0; n_ch];
    for t in trials {
        for (c, s) in sq.iter_mut().enumerate() {
            let mu = mean[c];
            *s += t.inputs[c].iter().map(|v| (v - mu) * (v - mu)).sum::<f64>();
        }
    }
    let std = sq
        .iter()
        .enumerate()
        .map(|(c, s)| {
            let sd = (s / count as f64).sqrt();
            if sd < STD_FLOOR {
                log::warn!(
                    "channel {} ({}) is degenerate (std {sd:e}); flooring to {STD_FLOOR:e}",
                    c,
                    first.layout.names()[c]
                );
                STD_FLOOR
            } else {
                sd
            }
        })
        .collect();
    Ok(Standardizer { mean, std })
}

/// Returns a copy of `trial` with standardized inputs. Targets keep their
/// physical units.
pub fn apply_standardizer(standardizer: &Standardizer, trial: &GaitTrial) -> Result<GaitTrial, DataError> {
    standardizer.check(trial.num_channels())?;
    let mut out = trial.clone();
    for (c, row) in out.inputs.iter_mut().enumerate() {
        for v in row.iter_mut() {
            *v = standardizer.apply_value(c, *v);
        }
    }
    Ok(out)
}

/// Inverse of [`apply_standardizer`].
pub fn unstandardize(standardizer: &Standardizer, trial: &GaitTrial) -> Result<GaitTrial, DataError> {
    standardizer.check(trial.num_channels())?;
    let mut out = trial.clone();
    for (c, row) in out.inputs.iter_mut().enumerate() {
        for v in row.iter_mut() {
            *v = standardizer.invert_value(c, *v);
        }
    }
    Ok(out)
}
