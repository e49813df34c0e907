#![allow(dead_code)]

use ankle_tcn::loss::{softmax, stance_one_hot, LossState};
use ankle_tcn::nn::{HeadGrads, HeadMode, Mat, ModelConfig, TcnModel, TcnOutput};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn random_mat(rows: usize, cols: usize, seed: u64) -> Mat {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Mat::from_vec(rows, cols, (0..rows * cols).map(|_| rng.random_range(-1.5..1.5)).collect())
}

/// Tiny dual-output model with random biases too, dropout off.
pub fn tiny_model(heads: HeadMode, seed: u64) -> TcnModel {
    let cfg = ModelConfig::new(2, 8, 3, 16, heads).unwrap().with_dropout(0.0).unwrap();
    let mut m = TcnModel::init(cfg, seed).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0xb1a5);
    let layout = m.layout().clone();
    let mut bias_ranges: Vec<std::ops::Range<usize>> = Vec::new();
    for b in &layout.blocks {
        bias_ranges.push(b.conv1_b.clone());
        bias_ranges.push(b.conv2_b.clone());
        if let Some((_, pb)) = &b.proj {
            bias_ranges.push(pb.clone());
        }
    }
    bias_ranges.push(layout.torque_b.clone());
    if let Some((_, sb)) = &layout.stance {
        bias_ranges.push(sb.clone());
    }
    for r in bias_ranges {
        for p in &mut m.params_mut()[r] {
            *p = rng.random_range(-0.2..0.2);
        }
    }
    m
}

/// Zero-padded causal convolution written out with explicit index checks:
/// `y[o][t] = b[o] + sum_i sum_j w[o][i][j] * x[i][t - (k-1-j) d]`.
fn conv_padded(x: &[Vec<f64>], w: &[f64], b: &[f64], k: usize, d: usize) -> Vec<Vec<f64>> {
    let (cin, t_len, cout) = (x.len(), x[0].len(), b.len());
    let mut y = vec![vec![0.0; t_len]; cout];
    for o in 0..cout {
        for t in 0..t_len {
            let mut acc = b[o];
            for i in 0..cin {
                for j in 0..k {
                    let back = (k - 1 - j) * d;
                    if t >= back {
                        acc += w[(o * cin + i) * k + j] * x[i][t - back];
                    }
                }
            }
            y[o][t] = acc;
        }
    }
    y
}

fn relu(v: &mut [Vec<f64>]) {
    v.iter_mut().flatten().for_each(|x| *x = x.max(0.0));
}

/// Full-sequence, zero-padded reference network. Returns one output per
/// time step.
pub fn naive_forward_all(model: &TcnModel, x: &Mat) -> Vec<TcnOutput> {
    let p = model.params();
    let cfg = model.config();
    let k = cfg.kernel_size;
    let mut h: Vec<Vec<f64>> = (0..x.rows()).map(|r| x.row(r).to_vec()).collect();
    for bl in &model.layout().blocks {
        let mut a1 = conv_padded(&h, &p[bl.conv1_w.clone()], &p[bl.conv1_b.clone()], k, bl.dilation);
        relu(&mut a1);
        let mut a2 = conv_padded(&a1, &p[bl.conv2_w.clone()], &p[bl.conv2_b.clone()], k, bl.dilation);
        relu(&mut a2);
        let skip = match &bl.proj {
            Some((w, b)) => conv_padded(&h, &p[w.clone()], &p[b.clone()], 1, 1),
            None => h.clone(),
        };
        for (row, s) in a2.iter_mut().zip(&skip) {
            for (v, sv) in row.iter_mut().zip(s) {
                *v += sv;
            }
        }
        h = a2;
    }
    let ch = cfg.channels;
    let tw = &p[model.layout().torque_w.clone()];
    let tb = p[model.layout().torque_b.start];
    (0..x.cols())
        .map(|t| {
            let f: Vec<f64> = (0..ch).map(|c| h[c][t]).collect();
            let torque = tb + tw.iter().zip(&f).map(|(a, b)| a * b).sum::<f64>();
            let stance_logits = model.layout().stance.as_ref().map(|(w, b)| {
                let w = &p[w.clone()];
                let b = &p[b.clone()];
                let row = |r: usize| b[r] + (0..ch).map(|c| w[r * ch + c] * f[c]).sum::<f64>();
                [row(0), row(1)]
            });
            TcnOutput { torque, stance_logits }
        })
        .collect()
}

/// A small batch of windows with targets for gradient checks.
pub struct Batch {
    pub windows: Vec<Mat>,
    pub torque: Vec<f64>,
    pub stance: Vec<bool>,
}

pub fn random_batch(h: usize, n: usize, seed: u64) -> Batch {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Batch {
        windows: (0..n).map(|i| random_mat(16, h, seed * 1000 + i as u64)).collect(),
        torque: (0..n).map(|_| rng.random_range(-0.5..1.5)).collect(),
        stance: (0..n).map(|i| i % 2 == 0).collect(),
    }
}

/// Balanced multi-task loss `w1 * mse + w2 * ce` with frozen weights,
/// computed with plain loops.
pub fn batch_loss(model: &TcnModel, b: &Batch, w: [f64; 2]) -> f64 {
    let n = b.windows.len() as f64;
    let (mut mse, mut ce) = (0.0, 0.0);
    for (i, win) in b.windows.iter().enumerate() {
        let out = model.forward(win).unwrap();
        mse += (out.torque - b.torque[i]).powi(2) / n;
        if let Some(l) = out.stance_logits {
            let m = l[0].max(l[1]);
            let lse = m + ((l[0] - m).exp() + (l[1] - m).exp()).ln();
            let y = stance_one_hot(b.stance[i]);
            ce -= (y[0] * (l[0] - lse) + y[1] * (l[1] - lse)) / n;
        }
    }
    w[0] * mse + w[1] * ce
}

/// Analytic gradient of [`batch_loss`] via the model's backward pass.
pub fn batch_grad(model: &TcnModel, b: &Batch, w: [f64; 2]) -> Vec<f64> {
    let n = b.windows.len() as f64;
    let mut grads = vec![0.0; model.num_params()];
    let mut cache = ankle_tcn::nn::ForwardCache::new();
    for (i, win) in b.windows.iter().enumerate() {
        let out = model.forward_cached(win, &mut cache, None::<&mut ChaCha8Rng>).unwrap();
        let stance_logits = out.stance_logits.map(|l| {
            let p = softmax(l);
            let y = stance_one_hot(b.stance[i]);
            [w[1] * (p[0] - y[0]) / n, w[1] * (p[1] - y[1]) / n]
        });
        let up = HeadGrads { torque: w[0] * 2.0 * (out.torque - b.torque[i]) / n, stance_logits };
        model.backward(&cache, &up, &mut grads).unwrap();
    }
    grads
}

/// Loss weights from one EMA step on this batch's losses, then frozen.
pub fn frozen_weights(model: &TcnModel, b: &Batch) -> [f64; 2] {
    if !model.config().heads.is_dual() {
        return [1.0, 0.0];
    }
    let l1 = batch_loss(model, b, [1.0, 0.0]);
    let l2 = batch_loss(model, b, [0.0, 1.0]);
    let mut s = LossState::new(0.9).unwrap();
    s.step(l1, l2).unwrap().1
}

/// Largest relative error between the analytic gradient and central
/// differences with step `eps`, over every parameter.
pub fn max_grad_rel_error(model: &TcnModel, b: &Batch, eps: f64) -> f64 {
    let w = frozen_weights(model, b);
    let analytic = batch_grad(model, b, w);
    let scale = analytic.iter().fold(0.0f64, |m, g| m.max(g.abs()));
    let mut m = model.clone();
    let mut worst = 0.0f64;
    for i in 0..model.num_params() {
        let orig = m.params()[i];
        m.params_mut()[i] = orig + eps;
        let up = batch_loss(&m, b, w);
        m.params_mut()[i] = orig - eps;
        let down = batch_loss(&m, b, w);
        m.params_mut()[i] = orig;
        let numeric = (up - down) / (2.0 * eps);
        // Entries far below the gradient's overall scale are compared
        // against that scale instead of their own magnitude.
        let denom = analytic[i].abs().max(numeric.abs()).max(1e-3 * scale);
        worst = worst.max((analytic[i] - numeric).abs() / denom);
    }
    worst
}
