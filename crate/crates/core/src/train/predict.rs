use std::ops::Range;

use rand_chacha::ChaCha8Rng;

use super::TrainError;
use crate::data::{apply_standardizer, GaitTrial, Standardizer};
use crate::metrics::{
    detect_peaks, phase_accuracy, regression_metrics, stance_swing_rmse, PeakRow, RegressionMetrics, StanceSwingRmse,
};
use crate::nn::{ForwardCache, Mat, TcnModel, TcnOutput};

/// Windows evaluated per inference pass.
const INFER_CHUNK: usize = 512;

/// Anything that maps a raw (unstandardized) trial to one output per
/// window end `h-1 .. len`.
pub trait Predictor {
    fn receptive_field(&self) -> usize;
    fn predict(&self, trial: &GaitTrial) -> Result<Vec<TcnOutput>, TrainError>;
}

/// A model with the input statistics it was trained with.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainedModel {
    pub model: TcnModel,
    pub standardizer: Standardizer,
}

impl Predictor for TrainedModel {
    fn receptive_field(&self) -> usize {
        self.model.receptive_field()
    }

    fn predict(&self, trial: &GaitTrial) -> Result<Vec<TcnOutput>, TrainError> {
        let z = apply_standardizer(&self.standardizer, trial)?;
        let h = self.model.receptive_field();
        if z.len() < h {
            return Err(crate::data::DataError::TrialTooShort { len: z.len(), h }.into());
        }
        predict_trial(&self.model, &z, h - 1..z.len())
    }
}

/// Predicts zero torque and uninformative logits.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ZeroPredictor {
    pub h: usize,
    pub dual: bool,
}

impl Predictor for ZeroPredictor {
    fn receptive_field(&self) -> usize {
        self.h
    }

    fn predict(&self, trial: &GaitTrial) -> Result<Vec<TcnOutput>, TrainError> {
        let n = trial.len().saturating_sub(self.h - 1);
        Ok(vec![TcnOutput { torque: 0.0, stance_logits: self.dual.then_some([0.0, 0.0]) }; n])
    }
}

/// Inference (dropout off) for the windows ending at `ends` of an already
/// standardized trial.
pub fn predict_trial(model: &TcnModel, trial: &GaitTrial, ends: Range<usize>) -> Result<Vec<TcnOutput>, TrainError> {
    let h = model.receptive_field();
    let mut out = Vec::with_capacity(ends.len());
    let mut cache = ForwardCache::new();
    let mut x = Mat::default();
    let mut first = ends.start;
    while first < ends.end {
        let count = INFER_CHUNK.min(ends.end - first);
        fill_chunk(trial, first, count, h, &mut x);
        out.extend(model.forward_seq_cached(&x, &mut cache, None::<&mut ChaCha8Rng>)?);
        first += count;
    }
    Ok(out)
}

/// Input columns for the `count` windows ending at `first_end ..`.
pub(crate) fn fill_chunk(trial: &GaitTrial, first_end: usize, count: usize, h: usize, x: &mut Mat) {
    let start = first_end + 1 - h;
    let len = h - 1 + count;
    x.reset(trial.num_channels(), len);
    for (c, ch) in trial.inputs.iter().enumerate() {
        x.row_mut(c).copy_from_slice(&ch[start..start + len]);
    }
}

/// Predictions and targets pooled over a set of trials.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Evaluation {
    pub torque_pred: Vec<f64>,
    pub torque_true: Vec<f64>,
    pub stance_true: Vec<bool>,
    pub logits: Vec<[f64; 2]>,
}

impl Evaluation {
    pub fn regression(&self) -> Result<RegressionMetrics, TrainError> {
        Ok(regression_metrics(&self.torque_pred, &self.torque_true)?)
    }

    pub fn stance_swing(&self) -> Result<StanceSwingRmse, TrainError> {
        Ok(stance_swing_rmse(&self.torque_pred, &self.torque_true, &self.stance_true)?)
    }

    /// `None` for single-output predictors.
    pub fn phase_accuracy(&self) -> Option<f64> {
        (!self.logits.is_empty()).then(|| phase_accuracy(&self.logits, &self.stance_true))
    }
}

pub fn evaluate(predictor: &dyn Predictor, trials: &[GaitTrial]) -> Result<Evaluation, TrainError> {
    let h = predictor.receptive_field();
    let mut ev = Evaluation::default();
    for t in trials {
        let outs = predictor.predict(t)?;
        ev.torque_true.extend_from_slice(&t.torque[h - 1..]);
        ev.stance_true.extend_from_slice(&t.stance[h - 1..]);
        for o in outs {
            ev.torque_pred.push(o.torque);
            if let Some(l) = o.stance_logits {
                ev.logits.push(l);
            }
        }
    }
    if ev.torque_pred.is_empty() {
        return Err(TrainError::EmptyDataset("no evaluation windows".into()));
    }
    Ok(ev)
}

/// Predicted and true peaks for every stride of `trial` covered by `pred`,
/// where `pred[i]` estimates `trial.torque[first + i]`.
pub fn stride_peaks(trial: &GaitTrial, first: usize, pred: &[f64]) -> Result<(Vec<PeakRow>, Vec<PeakRow>), TrainError> {
    let end = first + pred.len();
    if end > trial.len() {
        return Err(crate::metrics::MetricsError::LengthMismatch(end, trial.len()).into());
    }
    let bounds: Vec<usize> =
        trial.stride_starts.iter().filter(|&&b| b >= first && b <= end).map(|b| b - first).collect();
    if bounds.len() < 2 {
        return Ok((Vec::new(), Vec::new()));
    }
    Ok((detect_peaks(pred, &bounds)?, detect_peaks(&trial.torque[first..end], &bounds)?))
}

/// [`stride_peaks`] over the full predictor output of each trial.
pub fn peak_comparison(
    predictor: &dyn Predictor,
    trials: &[GaitTrial],
) -> Result<(Vec<PeakRow>, Vec<PeakRow>), TrainError> {
    let h = predictor.receptive_field();
    let (mut pred, mut truth) = (Vec::new(), Vec::new());
    for t in trials {
        let p: Vec<f64> = predictor.predict(t)?.iter().map(|o| o.torque).collect();
        let (a, b) = stride_peaks(t, h - 1, &p)?;
        pred.extend(a);
        truth.extend(b);
    }
    Ok((pred, truth))
}
