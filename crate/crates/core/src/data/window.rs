use super::{DataError, GaitTrial};
use crate::nn::Mat;

/// One causal input window and the labels at its final sample.
#[derive(Debug, Clone, PartialEq)]
pub struct SensorWindow {
    /// `channels x h`, column `h - 1` is sample `end`.
    pub inputs: Mat,
    pub end: usize,
    pub torque: f64,
    pub stance: bool,
}

/// End indices `h-1, h-1+stride, ...` below `len`.
pub fn window_ends(
    len: usize,
    h: usize,
    stride: usize,
) -> Result<std::iter::StepBy<std::ops::Range<usize>>, DataError> {
    if h == 0 || stride == 0 {
        return Err(DataError::Invalid("window length and stride must be >= 1".into()));
    }
    if len < h {
        return Err(DataError::TrialTooShort { len, h });
    }
    Ok((h - 1..len).step_by(stride))
}

/// Copies samples `end+1-h ..= end` of every channel into `out`.
pub fn extract_window(trial: &GaitTrial, end: usize, h: usize, out: &mut Mat) {
    let start = end + 1 - h;
    out.reset(trial.num_channels(), h);
    for (c, ch) in trial.inputs.iter().enumerate() {
        out.row_mut(c).copy_from_slice(&ch[start..=end]);
    }
}

pub fn make_windows(trial: &GaitTrial, h: usize, stride: usize) -> Result<Vec<SensorWindow>, DataError> {
    window_ends(trial.len(), h, stride)?
        .map(|end| {
            let mut inputs = Mat::zeros(trial.num_channels(), h);
            extract_window(trial, end, h, &mut inputs);
            Ok(SensorWindow { inputs, end, torque: trial.torque[end], stance: trial.stance[end] })
        })
        .collect()
}
