use super::pipeline::{finetune, train_from_scratch};
use super::predict::{evaluate, Predictor};
use super::report::EvalReport;
use super::{EpochLog, TrainConfig, TrainError};
use crate::data::GaitTrial;
use crate::metrics::{RegressionMetrics, StanceSwingRmse};
use crate::nn::TcnModel;

#[derive(Debug, Clone, PartialEq)]
pub struct FoldResult {
    pub test_participant: String,
    pub train_participants: Vec<String>,
    pub test_windows: usize,
    pub metrics: RegressionMetrics,
    pub stance_swing: StanceSwingRmse,
    pub phase_accuracy: Option<f64>,
    pub curves: Vec<EpochLog>,
}

/// Trials grouped by participant id, in sorted id order.
pub fn group_by_participant(trials: &[GaitTrial]) -> Vec<(String, Vec<GaitTrial>)> {
    let mut groups: std::collections::BTreeMap<String, Vec<GaitTrial>> = Default::default();
    for t in trials {
        groups.entry(t.meta.participant_id.clone()).or_default().push(t.clone());
    }
    groups.into_iter().collect()
}

/// Leave-one-participant-out evaluation with a caller-supplied trainer.
/// `train` receives only the training participants' trials and returns a
/// predictor plus its training curves.
pub fn loocv_with<F>(trials: &[GaitTrial], mut train: F) -> Result<EvalReport, TrainError>
where
    F: FnMut(&[GaitTrial]) -> Result<(Box<dyn Predictor>, Vec<EpochLog>), TrainError>,
{
    let groups = group_by_participant(trials);
    if groups.len() < 2 {
        return Err(TrainError::TooFewParticipants { needed: 2, got: groups.len() });
    }
    let mut folds = Vec::with_capacity(groups.len());
    for (i, (test_id, test_trials)) in groups.iter().enumerate() {
        let train_set: Vec<GaitTrial> =
            groups.iter().enumerate().filter(|(j, _)| *j != i).flat_map(|(_, (_, ts))| ts.iter().cloned()).collect();
        let train_participants = groups.iter().filter(|(id, _)| id != test_id).map(|(id, _)| id.clone()).collect();
        log::info!("fold {}/{}: testing on {test_id}", i + 1, groups.len());
        let (pred, curves) = train(&train_set)?;
        let ev = evaluate(pred.as_ref(), test_trials)?;
        folds.push(FoldResult {
            test_participant: test_id.clone(),
            train_participants,
            test_windows: ev.torque_pred.len(),
            metrics: ev.regression()?,
            stance_swing: ev.stance_swing()?,
            phase_accuracy: ev.phase_accuracy(),
            curves,
        });
    }
    Ok(EvalReport::from_folds(folds))
}

/// LOOCV of fine-tuning `pretrained` (or training from scratch when no
/// model is given) for `finetune_epochs` epochs per fold.
pub fn loocv(trials: &[GaitTrial], cfg: &TrainConfig, pretrained: Option<&TcnModel>) -> Result<EvalReport, TrainError> {
    cfg.validate()?;
    loocv_with(trials, |train| {
        let out = match pretrained {
            Some(m) => finetune(m, train, cfg)?,
            None => train_from_scratch(train, cfg, cfg.finetune_epochs)?,
        };
        Ok((Box::new(out.trained) as Box<dyn Predictor>, out.curves))
    })
}
