use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::predict::{fill_chunk, predict_trial, TrainedModel};
use super::{TrainConfig, TrainError};
use crate::data::{apply_standardizer, fit_standardizer, GaitTrial, Standardizer};
use crate::loss::{mse_loss, softmax, softmax_cross_entropy, stance_one_hot, LossError, LossState};
use crate::metrics::regression_metrics;
use crate::nn::{adamw_step, AdamWConfig, ForwardCache, HeadGrads, Mat, NnError, OptimState, TcnModel, TcnOutput};

/// Optimizer steps excluded from the loss-balance statistic.
pub const WARMUP_STEPS: u64 = 20;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochLog {
    pub epoch: usize,
    pub train_torque_mse: f64,
    /// NaN for single-output training.
    pub train_stance_ce: f64,
    pub val_torque_mse: f64,
    pub val_stance_ce: f64,
    pub val_r2: f64,
    /// Largest batch stance loss divided by its EMA after warm-up (dual
    /// output only, NaN otherwise).
    pub max_stance_loss_ratio: f64,
    /// Steps whose stance-loss average fell below the division guard.
    pub guarded_steps: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainOutcome {
    pub trained: TrainedModel,
    /// Epoch 0 evaluates the starting model.
    pub curves: Vec<EpochLog>,
    pub best_epoch: usize,
    pub best_val_torque_mse: f64,
}

/// Window ends of one trial after the time-block split.
struct SplitTrial {
    train: std::ops::Range<usize>,
    val: std::ops::Range<usize>,
}

fn split_trial(len: usize, h: usize, ratio: f64) -> SplitTrial {
    let cut = ((len as f64) * ratio).floor() as usize;
    let train = if cut > h - 1 { h - 1..cut } else { 0..0 };
    let val_start = (cut + h - 1).min(len);
    SplitTrial { train, val: val_start..len }
}

fn participants(trials: &[GaitTrial]) -> usize {
    let mut ids: Vec<&str> = trials.iter().map(|t| t.meta.participant_id.as_str()).collect();
    ids.sort_unstable();
    ids.dedup();
    ids.len()
}

fn training_slices(trials: &[GaitTrial], ratio: f64) -> Vec<GaitTrial> {
    trials.iter().map(|t| t.slice(0..((t.len() as f64) * ratio).floor() as usize)).collect()
}

fn fit_on_train_split(trials: &[GaitTrial], ratio: f64) -> Result<Standardizer, TrainError> {
    let parts = training_slices(trials, ratio);
    let refs: Vec<&GaitTrial> = parts.iter().collect();
    Ok(fit_standardizer(&refs)?)
}

/// Pretraining from a fresh initialization. Needs at least two
/// participants.
pub fn pretrain(trials: &[GaitTrial], cfg: &TrainConfig) -> Result<TrainOutcome, TrainError> {
    let got = participants(trials);
    if got < 2 {
        return Err(TrainError::TooFewParticipants { needed: 2, got });
    }
    train_from_scratch(trials, cfg, cfg.pretrain_epochs)
}

/// Fresh initialization trained for `epochs` epochs.
pub fn train_from_scratch(trials: &[GaitTrial], cfg: &TrainConfig, epochs: usize) -> Result<TrainOutcome, TrainError> {
    cfg.validate()?;
    let first = trials.first().ok_or_else(|| TrainError::EmptyDataset("no training trials".into()))?;
    let model = TcnModel::init(cfg.model_config(first.num_channels())?, cfg.seed)?;
    let standardizer = fit_on_train_split(trials, cfg.split_ratio)?;
    train_loop(model, standardizer, trials, cfg, epochs, cfg.learning_rate)
}

/// Continues training every parameter of `pretrained` on `trials` with a
/// standardizer refitted on their training split.
pub fn finetune(pretrained: &TcnModel, trials: &[GaitTrial], cfg: &TrainConfig) -> Result<TrainOutcome, TrainError> {
    cfg.validate()?;
    let first = trials.first().ok_or_else(|| TrainError::EmptyDataset("no fine-tuning trials".into()))?;
    let mc = pretrained.config();
    if mc.input_channels != first.num_channels() {
        return Err(TrainError::ArchitectureMismatch(format!(
            "model takes {} input channels, trials have {}",
            mc.input_channels,
            first.num_channels()
        )));
    }
    if mc.heads != cfg.heads {
        return Err(TrainError::ArchitectureMismatch(format!(
            "model has {:?} heads, config asks for {:?}",
            mc.heads, cfg.heads
        )));
    }
    let standardizer = fit_on_train_split(trials, cfg.split_ratio)?;
    train_loop(pretrained.clone(), standardizer, trials, cfg, cfg.finetune_epochs, cfg.finetune_learning_rate)
}

struct ValScore {
    mse: f64,
    ce: f64,
    r2: f64,
}

fn validate(model: &TcnModel, trials: &[GaitTrial], splits: &[SplitTrial]) -> Result<ValScore, TrainError> {
    let (mut pred, mut target, mut logits, mut onehot) = (Vec::new(), Vec::new(), Vec::new(), Vec::new());
    for (t, s) in trials.iter().zip(splits) {
        if s.val.is_empty() {
            continue;
        }
        let outs = predict_trial(model, t, s.val.clone())?;
        for (o, end) in outs.iter().zip(s.val.clone()) {
            pred.push(o.torque);
            target.push(t.torque[end]);
            if let Some(l) = o.stance_logits {
                logits.push(l);
                onehot.push(stance_one_hot(t.stance[end]));
            }
        }
    }
    if pred.is_empty() {
        return Err(TrainError::EmptyDataset("no validation windows; trials are too short for the split".into()));
    }
    Ok(ValScore {
        mse: mse_loss(&pred, &target)?,
        ce: if logits.is_empty() { f64::NAN } else { softmax_cross_entropy(&logits, &onehot)? },
        r2: regression_metrics(&pred, &target)?.r2,
    })
}

/// Runs `epochs` epochs and returns the parameters with the lowest
/// validation torque MSE (the starting point included).
fn train_loop(
    mut model: TcnModel,
    standardizer: Standardizer,
    raw_trials: &[GaitTrial],
    cfg: &TrainConfig,
    epochs: usize,
    lr: f64,
) -> Result<TrainOutcome, TrainError> {
    let trials: Vec<GaitTrial> =
        raw_trials.iter().map(|t| apply_standardizer(&standardizer, t)).collect::<Result<_, _>>()?;
    let h = model.receptive_field();
    let splits: Vec<SplitTrial> = trials.iter().map(|t| split_trial(t.len(), h, cfg.split_ratio)).collect();

    // (trial, first end, window count)
    let mut chunks: Vec<(usize, usize, usize)> = Vec::new();
    for (ti, s) in splits.iter().enumerate() {
        let mut e = s.train.start;
        while e < s.train.end {
            let n = cfg.window_chunk.min(s.train.end - e);
            chunks.push((ti, e, n));
            e += n;
        }
    }
    if chunks.is_empty() {
        return Err(TrainError::EmptyDataset(format!("no training windows of length {h}")));
    }

    let dual = model.head_mode().is_dual();
    let hyper = AdamWConfig { lr, weight_decay: cfg.weight_decay, ..AdamWConfig::default() };
    let mut opt = OptimState::new(model.num_params(), hyper);
    let mut balance = LossState::new(cfg.alpha)?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed ^ 0x5eed_7a11_0000_0001);

    let v0 = validate(&model, &trials, &splits)?;
    let mut curves = vec![EpochLog {
        epoch: 0,
        train_torque_mse: f64::NAN,
        train_stance_ce: f64::NAN,
        val_torque_mse: v0.mse,
        val_stance_ce: v0.ce,
        val_r2: v0.r2,
        max_stance_loss_ratio: f64::NAN,
        guarded_steps: 0,
    }];
    let mut best = (0usize, v0.mse, model.params().to_vec());

    let per_batch = cfg.chunks_per_batch();
    let mut caches: Vec<ForwardCache> = (0..per_batch).map(|_| ForwardCache::new()).collect();
    let mut outs: Vec<Vec<TcnOutput>> = vec![Vec::new(); per_batch];
    let mut ups: Vec<Vec<HeadGrads>> = vec![Vec::new(); per_batch];
    let mut grads = vec![0.0; model.num_params()];
    let mut x = Mat::default();
    let (mut pred, mut target, mut logits, mut onehot) = (Vec::new(), Vec::new(), Vec::new(), Vec::new());

    for epoch in 1..=epochs {
        chunks.shuffle(&mut rng);
        let (mut sum_mse, mut sum_ce, mut n_batches) = (0.0, 0.0, 0usize);
        let mut max_ratio = f64::NAN;
        let mut guarded_steps = 0u64;
        for batch in chunks.chunks(per_batch) {
            pred.clear();
            target.clear();
            logits.clear();
            onehot.clear();
            for (bi, &(ti, first, count)) in batch.iter().enumerate() {
                fill_chunk(&trials[ti], first, count, h, &mut x);
                outs[bi] = model.forward_seq_cached(&x, &mut caches[bi], Some(&mut rng))?;
                for (o, end) in outs[bi].iter().zip(first..first + count) {
                    pred.push(o.torque);
                    target.push(trials[ti].torque[end]);
                    if let Some(l) = o.stance_logits {
                        logits.push(l);
                        onehot.push(stance_one_hot(trials[ti].stance[end]));
                    }
                }
            }
            let l1 = mse_loss(&pred, &target)?;
            let l2 = if dual { softmax_cross_entropy(&logits, &onehot)? } else { 0.0 };
            if !l1.is_finite() || !l2.is_finite() {
                return Err(TrainError::Diverged { epoch, step: opt.step_count(), torque_loss: l1, stance_loss: l2 });
            }
            let w = if dual {
                let w = match balance.step(l1, l2) {
                    Ok((_, w)) => w,
                    Err(LossError::DivisionGuard { head, ema }) => {
                        log::debug!("step {}: head {head} average {ema:e} below guard", opt.step_count());
                        guarded_steps += 1;
                        balance.weights_floored()
                    }
                    Err(e) => return Err(e.into()),
                };
                if opt.step_count() >= WARMUP_STEPS {
                    let r = l2 * w[1];
                    max_ratio = if max_ratio.is_nan() { r } else { max_ratio.max(r) };
                }
                w
            } else {
                [1.0, 0.0]
            };
            sum_mse += l1;
            sum_ce += l2;
            n_batches += 1;

            let inv_b = 1.0 / pred.len() as f64;
            let mut k = 0usize;
            for (bi, &(ti, first, count)) in batch.iter().enumerate() {
                ups[bi].clear();
                for (o, end) in outs[bi].iter().zip(first..first + count) {
                    let gt = w[0] * 2.0 * (o.torque - trials[ti].torque[end]) * inv_b;
                    let gs = o.stance_logits.map(|l| {
                        let p = softmax(l);
                        let y = onehot[k];
                        [w[1] * (p[0] - y[0]) * inv_b, w[1] * (p[1] - y[1]) * inv_b]
                    });
                    ups[bi].push(HeadGrads { torque: gt, stance_logits: gs });
                    k += 1;
                }
            }
            grads.iter_mut().for_each(|g| *g = 0.0);
            for bi in 0..batch.len() {
                model.backward_seq(&caches[bi], &ups[bi], &mut grads)?;
            }
            match adamw_step(model.params_mut(), &grads, &mut opt) {
                Ok(()) => {}
                Err(NnError::NonFiniteGradient { .. }) => {
                    return Err(TrainError::Diverged {
                        epoch,
                        step: opt.step_count(),
                        torque_loss: l1,
                        stance_loss: l2,
                    })
                }
                Err(e) => return Err(e.into()),
            }
        }
        let v = validate(&model, &trials, &splits)?;
        if !v.mse.is_finite() {
            return Err(TrainError::Diverged { epoch, step: opt.step_count(), torque_loss: v.mse, stance_loss: v.ce });
        }
        log::info!(
            "epoch {epoch}/{epochs}: train mse {:.5} ce {:.4} | val mse {:.5} ce {:.4} r2 {:.4}",
            sum_mse / n_batches as f64,
            sum_ce / n_batches as f64,
            v.mse,
            v.ce,
            v.r2
        );
        curves.push(EpochLog {
            epoch,
            train_torque_mse: sum_mse / n_batches as f64,
            train_stance_ce: if dual { sum_ce / n_batches as f64 } else { f64::NAN },
            val_torque_mse: v.mse,
            val_stance_ce: v.ce,
            val_r2: v.r2,
            max_stance_loss_ratio: max_ratio,
            guarded_steps,
        });
        if v.mse < best.1 {
            best = (epoch, v.mse, model.params().to_vec());
        }
    }
    model.params_mut().copy_from_slice(&best.2);
    Ok(TrainOutcome {
        trained: TrainedModel { model, standardizer },
        curves,
        best_epoch: best.0,
        best_val_torque_mse: best.1,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn split_blocks_do_not_overlap() {
        let s = split_trial(1000, 57, 0.9);
        assert_eq!(s.train, 56..900);
        assert_eq!(s.val, 956..1000);
        // A validation window starts at or after the first held-out sample.
        assert!(s.val.start + 1 - 57 >= s.train.end);
    }

    #[test]
    fn split_of_short_trial_is_empty() {
        let s = split_trial(40, 57, 0.9);
        assert!(s.train.is_empty() && s.val.is_empty());
    }
}
