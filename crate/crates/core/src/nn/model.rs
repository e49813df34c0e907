use std::ops::Range;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Uniform};

use super::conv::{conv_valid_backward, conv_valid_forward, dot};
use super::{BlockParams, HeadMode, Mat, ModelConfig, NnError};

/// Offsets of one residual block's tensors inside the flat parameter buffer.
#[derive(Debug, Clone, PartialEq)]
pub struct BlockLayout {
    pub in_channels: usize,
    pub out_channels: usize,
    pub dilation: usize,
    pub conv1_w: Range<usize>,
    pub conv1_b: Range<usize>,
    pub conv2_w: Range<usize>,
    pub conv2_b: Range<usize>,
    /// 1x1 projection, present iff `in_channels != out_channels`.
    pub proj: Option<(Range<usize>, Range<usize>)>,
}

/// Parameter order: for each block `conv1.w, conv1.b, conv2.w, conv2.b,
/// [proj.w, proj.b]`, then `torque.w, torque.b`, then (dual only)
/// `stance.w, stance.b`. Conv weights are `[out][in][k]`, dense heads
/// `[out][in]`.
#[derive(Debug, Clone, PartialEq)]
pub struct ParamLayout {
    pub blocks: Vec<BlockLayout>,
    pub torque_w: Range<usize>,
    pub torque_b: Range<usize>,
    pub stance: Option<(Range<usize>, Range<usize>)>,
    pub total: usize,
}

impl ParamLayout {
    pub fn new(config: &ModelConfig) -> Self {
        let mut off = 0usize;
        let mut take = |n: usize| {
            let r = off..off + n;
            off += n;
            r
        };
        let k = config.kernel_size;
        let ch = config.channels;
        let mut blocks = Vec::with_capacity(config.num_blocks);
        for (i, &dilation) in config.dilations.iter().enumerate() {
            let in_channels = if i == 0 { config.input_channels } else { ch };
            let conv1_w = take(ch * in_channels * k);
            let conv1_b = take(ch);
            let conv2_w = take(ch * ch * k);
            let conv2_b = take(ch);
            let proj = (in_channels != ch).then(|| (take(ch * in_channels), take(ch)));
            blocks.push(BlockLayout {
                in_channels,
                out_channels: ch,
                dilation,
                conv1_w,
                conv1_b,
                conv2_w,
                conv2_b,
                proj,
            });
        }
        let torque_w = take(ch);
        let torque_b = take(1);
        let stance = config.heads.is_dual().then(|| (take(2 * ch), take(2)));
        Self { blocks, torque_w, torque_b, stance, total: off }
    }
}

/// Network output for one window.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TcnOutput {
    /// Ankle torque in Nm/kg.
    pub torque: f64,
    /// Unnormalized `[stance, swing]` scores (dual-output only).
    pub stance_logits: Option<[f64; 2]>,
}

/// Loss gradients with respect to the network outputs.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct HeadGrads {
    pub torque: f64,
    pub stance_logits: Option<[f64; 2]>,
}

#[derive(Debug, Clone, Default)]
struct BlockCache {
    /// Post-activation, post-dropout output of conv1 (input of conv2).
    a1: Mat,
    /// Dropout multipliers for `a1`; empty when dropout was off.
    m1: Vec<f64>,
    /// Post-activation, post-dropout output of conv2.
    a2: Mat,
    m2: Vec<f64>,
    /// Block output, `a2 + skip`.
    out: Mat,
}

/// Activations recorded by a forward pass for the backward pass.
///
/// A cache can be reused across calls to avoid reallocating.
#[derive(Debug, Clone, Default)]
pub struct ForwardCache {
    input: Mat,
    blocks: Vec<BlockCache>,
    feature: Vec<f64>,
    filled_for: Option<usize>,
}

impl ForwardCache {
    pub fn new() -> Self {
        Self::default()
    }

    /// Penultimate feature vector read by the heads.
    pub fn feature(&self) -> &[f64] {
        &self.feature
    }
}

/// A temporal convolutional network with one or two output heads.
///
/// The network only evaluates the sample positions that feed the final
/// time step: each convolution is computed unpadded and shrinks the
/// sequence by `(k - 1) * d`, so a window of exactly `h` samples reduces to
/// a single feature column. This equals the zero-padded causal network
/// evaluated at its last step, because that step never reads padding.
#[derive(Debug, Clone, PartialEq)]
pub struct TcnModel {
    config: ModelConfig,
    layout: ParamLayout,
    params: Vec<f64>,
}

impl TcnModel {
    pub fn zeros(config: ModelConfig) -> Result<Self, NnError> {
        config.validate()?;
        let layout = ParamLayout::new(&config);
        let params = vec![0.0; layout.total];
        Ok(Self { config, layout, params })
    }

    /// Deterministic initialization: every weight tensor is drawn from
    /// `U(-a, a)` with `a = sqrt(1 / fan_in)` and rounded to `f32`; biases
    /// start at zero.
    pub fn init(config: ModelConfig, seed: u64) -> Result<Self, NnError> {
        let mut model = Self::zeros(config)?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let k = model.config.kernel_size;
        let mut tensors: Vec<(Range<usize>, usize)> = Vec::new();
        for b in &model.layout.blocks {
            tensors.push((b.conv1_w.clone(), b.in_channels * k));
            tensors.push((b.conv2_w.clone(), b.out_channels * k));
            if let Some((w, _)) = &b.proj {
                tensors.push((w.clone(), b.in_channels));
            }
        }
        tensors.push((model.layout.torque_w.clone(), model.config.channels));
        if let Some((w, _)) = &model.layout.stance {
            tensors.push((w.clone(), model.config.channels));
        }
        for (range, fan_in) in tensors {
            let a = (1.0 / fan_in as f64).sqrt();
            let dist = Uniform::new(-a, a).expect("a > 0");
            for p in &mut model.params[range] {
                *p = dist.sample(&mut rng) as f32 as f64;
            }
        }
        Ok(model)
    }

    pub fn from_params(config: ModelConfig, params: Vec<f64>) -> Result<Self, NnError> {
        config.validate()?;
        let layout = ParamLayout::new(&config);
        if params.len() != layout.total {
            return Err(NnError::ShapeMismatch(format!(
                "{} parameters given, architecture needs {}",
                params.len(),
                layout.total
            )));
        }
        if let Some(i) = params.iter().position(|p| !p.is_finite()) {
            return Err(NnError::InvalidConfig(format!("parameter {i} is not finite")));
        }
        Ok(Self { config, layout, params })
    }

    pub fn config(&self) -> &ModelConfig {
        &self.config
    }

    pub fn layout(&self) -> &ParamLayout {
        &self.layout
    }

    pub fn params(&self) -> &[f64] {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut [f64] {
        &mut self.params
    }

    pub fn num_params(&self) -> usize {
        self.layout.total
    }

    pub fn receptive_field(&self) -> usize {
        self.config.receptive_field()
    }

    /// Copy with every parameter rounded to single precision, the
    /// precision of the model file.
    pub fn quantized(&self) -> Self {
        let mut m = self.clone();
        for p in &mut m.params {
            *p = *p as f32 as f64;
        }
        m
    }

    pub fn block_params(&self, i: usize) -> BlockParams<'_> {
        let b = &self.layout.blocks[i];
        let p = &self.params;
        BlockParams {
            in_channels: b.in_channels,
            out_channels: b.out_channels,
            kernel_size: self.config.kernel_size,
            conv1_w: &p[b.conv1_w.clone()],
            conv1_b: &p[b.conv1_b.clone()],
            conv2_w: &p[b.conv2_w.clone()],
            conv2_b: &p[b.conv2_b.clone()],
            proj: b.proj.as_ref().map(|(w, bias)| (&p[w.clone()], &p[bias.clone()])),
        }
    }

    /// Inference-mode forward pass (dropout off).
    pub fn forward(&self, window: &Mat) -> Result<TcnOutput, NnError> {
        let mut cache = ForwardCache::default();
        self.forward_cached(window, &mut cache, None::<&mut ChaCha8Rng>)
    }

    /// Forward pass that records activations into `cache`. Dropout is
    /// applied iff `dropout_rng` is given and the configured rate is > 0.
    pub fn forward_cached<R: Rng + ?Sized>(
        &self,
        window: &Mat,
        cache: &mut ForwardCache,
        dropout_rng: Option<&mut R>,
    ) -> Result<TcnOutput, NnError> {
        let h = self.receptive_field();
        if window.cols() != h {
            return Err(NnError::WindowSize { expected: h, got: window.cols() });
        }
        Ok(self.forward_seq_cached(window, cache, dropout_rng)?[0])
    }

    /// Evaluates every window ending inside a contiguous chunk of `T >= h`
    /// samples in one pass. Output `j` belongs to the window ending at
    /// column `h - 1 + j` and equals what [`forward_cached`] returns for
    /// that window on its own (with dropout off). Dropout masks are shared
    /// by the overlapping windows.
    ///
    /// [`forward_cached`]: TcnModel::forward_cached
    pub fn forward_seq_cached<R: Rng + ?Sized>(
        &self,
        chunk: &Mat,
        cache: &mut ForwardCache,
        mut dropout_rng: Option<&mut R>,
    ) -> Result<Vec<TcnOutput>, NnError> {
        let h = self.receptive_field();
        if chunk.rows() != self.config.input_channels {
            return Err(NnError::ShapeMismatch(format!(
                "window has {} channels, model expects {}",
                chunk.rows(),
                self.config.input_channels
            )));
        }
        if chunk.cols() < h {
            return Err(NnError::WindowSize { expected: h, got: chunk.cols() });
        }
        cache.filled_for = None;
        cache.input.clone_from(chunk);
        cache.blocks.resize_with(self.layout.blocks.len(), BlockCache::default);

        let k = self.config.kernel_size;
        let p_drop = self.config.dropout;
        let ch = self.config.channels;
        for i in 0..self.layout.blocks.len() {
            let bl = &self.layout.blocks[i];
            let (prev, rest) = cache.blocks.split_at_mut(i);
            let x = if i == 0 { &cache.input } else { &prev[i - 1].out };
            let bc = &mut rest[0];
            let span = (k - 1) * bl.dilation;
            let l1 = x.cols() - span;
            let l2 = l1 - span;

            bc.a1.reset(ch, l1);
            conv_valid_forward(
                x,
                0,
                &self.params[bl.conv1_w.clone()],
                &self.params[bl.conv1_b.clone()],
                k,
                bl.dilation,
                &mut bc.a1,
            );
            relu_dropout(&mut bc.a1, &mut bc.m1, p_drop, dropout_rng.as_deref_mut());

            bc.a2.reset(ch, l2);
            conv_valid_forward(
                &bc.a1,
                0,
                &self.params[bl.conv2_w.clone()],
                &self.params[bl.conv2_b.clone()],
                k,
                bl.dilation,
                &mut bc.a2,
            );
            relu_dropout(&mut bc.a2, &mut bc.m2, p_drop, dropout_rng.as_deref_mut());

            let skip_off = 2 * span;
            match &bl.proj {
                Some((w, b)) => {
                    bc.out.reset(ch, l2);
                    conv_valid_forward(
                        x,
                        skip_off,
                        &self.params[w.clone()],
                        &self.params[b.clone()],
                        1,
                        1,
                        &mut bc.out,
                    );
                }
                None => {
                    bc.out.reset(ch, l2);
                    for c in 0..ch {
                        bc.out.row_mut(c).copy_from_slice(&x.row(c)[skip_off..skip_off + l2]);
                    }
                }
            }
            for (o, a) in bc.out.as_mut_slice().iter_mut().zip(bc.a2.as_slice()) {
                *o += a;
            }
        }

        let last = &cache.blocks.last().expect("num_blocks >= 1").out;
        let n_out = last.cols();
        debug_assert_eq!(n_out, chunk.cols() + 1 - h);
        cache.feature.clear();
        cache.feature.extend((0..ch).map(|c| last.get(c, n_out - 1)));
        let tw = &self.params[self.layout.torque_w.clone()];
        let tb = self.params[self.layout.torque_b.start];
        let mut feat = vec![0.0; ch];
        let outputs = (0..n_out)
            .map(|j| {
                for (c, f) in feat.iter_mut().enumerate() {
                    *f = last.get(c, j);
                }
                let torque = dot(tw, &feat) + tb;
                let stance_logits = self.layout.stance.as_ref().map(|(w, b)| {
                    let w = &self.params[w.clone()];
                    let b = &self.params[b.clone()];
                    [dot(&w[..ch], &feat) + b[0], dot(&w[ch..], &feat) + b[1]]
                });
                TcnOutput { torque, stance_logits }
            })
            .collect();
        cache.filled_for = Some(self.layout.total);
        Ok(outputs)
    }

    /// Accumulates `d loss / d params` into `grads`, given the gradients of
    /// the loss with respect to the outputs of the forward pass recorded in
    /// `cache`.
    pub fn backward(&self, cache: &ForwardCache, upstream: &HeadGrads, grads: &mut [f64]) -> Result<(), NnError> {
        self.backward_seq(cache, std::slice::from_ref(upstream), grads)
    }

    /// Backward pass for [`forward_seq_cached`]: `upstream[j]` is the loss
    /// gradient for output `j`.
    ///
    /// [`forward_seq_cached`]: TcnModel::forward_seq_cached
    pub fn backward_seq(&self, cache: &ForwardCache, upstream: &[HeadGrads], grads: &mut [f64]) -> Result<(), NnError> {
        if cache.filled_for != Some(self.layout.total)
            || cache.blocks.len() != self.layout.blocks.len()
            || cache.feature.len() != self.config.channels
        {
            return Err(NnError::MissingCache);
        }
        if grads.len() != self.layout.total {
            return Err(NnError::ShapeMismatch(format!(
                "gradient buffer has {} entries, model has {}",
                grads.len(),
                self.layout.total
            )));
        }
        let last = &cache.blocks.last().expect("num_blocks >= 1").out;
        let n_out = last.cols();
        if upstream.len() != n_out {
            return Err(NnError::ShapeMismatch(format!("{} upstream gradients for {n_out} outputs", upstream.len())));
        }
        let ch = self.config.channels;
        let k = self.config.kernel_size;

        let mut dfeat = Mat::zeros(ch, n_out);
        let tw = self.layout.torque_w.clone();
        for (j, up) in upstream.iter().enumerate() {
            let gt = up.torque;
            for c in 0..ch {
                grads[tw.start + c] += gt * last.get(c, j);
                dfeat.set(c, j, gt * self.params[tw.start + c]);
            }
            grads[self.layout.torque_b.start] += gt;
            if let (Some((sw, sb)), Some(gs)) = (&self.layout.stance, up.stance_logits) {
                for (cls, &g) in gs.iter().enumerate() {
                    for c in 0..ch {
                        grads[sw.start + cls * ch + c] += g * last.get(c, j);
                        let d = dfeat.get(c, j) + g * self.params[sw.start + cls * ch + c];
                        dfeat.set(c, j, d);
                    }
                    grads[sb.start + cls] += g;
                }
            }
        }

        let mut dout = dfeat;
        for i in (0..self.layout.blocks.len()).rev() {
            let bl = &self.layout.blocks[i];
            let bc = &cache.blocks[i];
            let x = if i == 0 { &cache.input } else { &cache.blocks[i - 1].out };
            let span = (k - 1) * bl.dilation;
            let skip_off = 2 * span;
            let need_dx = i > 0;
            let mut dx = if need_dx { Mat::zeros(x.rows(), x.cols()) } else { Mat::default() };

            match &bl.proj {
                Some((w, b)) => {
                    let (dw, db) = two_mut(grads, w.clone(), b.clone());
                    conv_valid_backward(
                        x,
                        skip_off,
                        &self.params[w.clone()],
                        1,
                        1,
                        &dout,
                        dw,
                        db,
                        need_dx.then_some(&mut dx),
                    );
                }
                None if need_dx => {
                    for c in 0..ch {
                        let g = dout.row(c);
                        for (d, v) in dx.row_mut(c)[skip_off..skip_off + g.len()].iter_mut().zip(g) {
                            *d += v;
                        }
                    }
                }
                None => {}
            }

            let mut dz2 = dout;
            relu_dropout_backward(&mut dz2, &bc.a2, &bc.m2);
            let mut da1 = Mat::zeros(bc.a1.rows(), bc.a1.cols());
            {
                let (dw, db) = two_mut(grads, bl.conv2_w.clone(), bl.conv2_b.clone());
                conv_valid_backward(
                    &bc.a1,
                    0,
                    &self.params[bl.conv2_w.clone()],
                    k,
                    bl.dilation,
                    &dz2,
                    dw,
                    db,
                    Some(&mut da1),
                );
            }
            relu_dropout_backward(&mut da1, &bc.a1, &bc.m1);
            {
                let (dw, db) = two_mut(grads, bl.conv1_w.clone(), bl.conv1_b.clone());
                conv_valid_backward(
                    x,
                    0,
                    &self.params[bl.conv1_w.clone()],
                    k,
                    bl.dilation,
                    &da1,
                    dw,
                    db,
                    need_dx.then_some(&mut dx),
                );
            }
            dout = dx;
        }
        Ok(())
    }

    pub fn head_mode(&self) -> HeadMode {
        self.config.heads
    }
}

fn relu_dropout<R: Rng + ?Sized>(a: &mut Mat, mask: &mut Vec<f64>, p: f64, rng: Option<&mut R>) {
    mask.clear();
    match rng {
        Some(rng) if p > 0.0 => {
            let scale = 1.0 / (1.0 - p);
            mask.reserve(a.as_slice().len());
            for v in a.as_mut_slice() {
                let m = if rng.random::<f64>() < p { 0.0 } else { scale };
                mask.push(m);
                *v = v.max(0.0) * m;
            }
        }
        _ => {
            for v in a.as_mut_slice() {
                *v = v.max(0.0);
            }
        }
    }
}

/// `g <- g * mask * [a > 0]`, where `a` is the post-activation value.
fn relu_dropout_backward(g: &mut Mat, a: &Mat, mask: &[f64]) {
    if mask.is_empty() {
        for (gv, &av) in g.as_mut_slice().iter_mut().zip(a.as_slice()) {
            if av <= 0.0 {
                *gv = 0.0;
            }
        }
    } else {
        for ((gv, &av), &m) in g.as_mut_slice().iter_mut().zip(a.as_slice()).zip(mask) {
            *gv = if av > 0.0 { *gv * m } else { 0.0 };
        }
    }
}

/// Two disjoint mutable sub-slices; `a` must end at or before `b` starts.
fn two_mut(buf: &mut [f64], a: Range<usize>, b: Range<usize>) -> (&mut [f64], &mut [f64]) {
    assert!(a.end <= b.start);
    let (lo, hi) = buf.split_at_mut(b.start);
    (&mut lo[a], &mut hi[..b.end - b.start])
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tiny(heads: HeadMode) -> ModelConfig {
        ModelConfig::new(2, 8, 3, 16, heads).unwrap()
    }

    fn window(cfg: &ModelConfig, seed: u64) -> Mat {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let h = cfg.receptive_field();
        let data = (0..cfg.input_channels * h).map(|_| rng.random::<f64>() * 2.0 - 1.0).collect();
        Mat::from_vec(cfg.input_channels, h, data)
    }

    #[test]
    fn zero_model_outputs_zero() {
        let cfg = tiny(HeadMode::DualOutput);
        let m = TcnModel::zeros(cfg.clone()).unwrap();
        let out = m.forward(&window(&cfg, 3)).unwrap();
        assert_eq!(out.torque, 0.0);
        assert_eq!(out.stance_logits, Some([0.0, 0.0]));
    }

    #[test]
    fn window_length_is_checked() {
        let cfg = tiny(HeadMode::SingleOutput);
        let m = TcnModel::init(cfg.clone(), 1).unwrap();
        let bad = Mat::zeros(16, cfg.receptive_field() + 1);
        assert_eq!(m.forward(&bad), Err(NnError::WindowSize { expected: 13, got: 14 }));
        assert!(matches!(m.forward(&Mat::zeros(15, 13)), Err(NnError::ShapeMismatch(_))));
    }

    #[test]
    fn init_is_seed_deterministic() {
        let cfg = tiny(HeadMode::DualOutput);
        let a = TcnModel::init(cfg.clone(), 42).unwrap();
        let b = TcnModel::init(cfg.clone(), 42).unwrap();
        let c = TcnModel::init(cfg, 43).unwrap();
        assert_eq!(a.params(), b.params());
        assert!(a.params().iter().zip(c.params()).any(|(x, y)| x != y));
        assert_eq!(a, a.quantized());
    }

    #[test]
    fn init_bounds_and_zero_biases() {
        let cfg = tiny(HeadMode::DualOutput);
        let m = TcnModel::init(cfg, 5).unwrap();
        let b0 = &m.layout().blocks[0];
        let a = (1.0f64 / (16.0 * 3.0)).sqrt();
        assert!(m.params()[b0.conv1_w.clone()].iter().all(|w| w.abs() <= a));
        assert!(m.params()[b0.conv1_b.clone()].iter().all(|&b| b == 0.0));
        assert!(b0.proj.is_some());
        assert!(m.layout().blocks[1].proj.is_none());
    }

    #[test]
    fn torque_bias_gradient_equals_upstream() {
        let cfg = tiny(HeadMode::SingleOutput);
        let m = TcnModel::init(cfg.clone(), 9).unwrap();
        let mut cache = ForwardCache::new();
        m.forward_cached(&window(&cfg, 1), &mut cache, None::<&mut ChaCha8Rng>).unwrap();
        let mut g = vec![0.0; m.num_params()];
        let up = HeadGrads { torque: 0.37, stance_logits: None };
        m.backward(&cache, &up, &mut g).unwrap();
        assert_eq!(g[m.layout().torque_b.start], 0.37);
    }

    #[test]
    fn zero_upstream_gives_zero_gradients() {
        let cfg = tiny(HeadMode::DualOutput);
        let m = TcnModel::init(cfg.clone(), 9).unwrap();
        let mut cache = ForwardCache::new();
        m.forward_cached(&window(&cfg, 1), &mut cache, None::<&mut ChaCha8Rng>).unwrap();
        let mut g = vec![0.0; m.num_params()];
        let up = HeadGrads { torque: 0.0, stance_logits: Some([0.0, 0.0]) };
        m.backward(&cache, &up, &mut g).unwrap();
        assert!(g.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn backward_without_forward_is_rejected() {
        let cfg = tiny(HeadMode::SingleOutput);
        let m = TcnModel::init(cfg, 9).unwrap();
        let mut g = vec![0.0; m.num_params()];
        assert_eq!(m.backward(&ForwardCache::new(), &HeadGrads::default(), &mut g), Err(NnError::MissingCache));
    }

    #[test]
    fn inference_is_deterministic_training_dropout_is_seeded() {
        let cfg = tiny(HeadMode::DualOutput).with_dropout(0.3).unwrap();
        let m = TcnModel::init(cfg.clone(), 2).unwrap();
        let w = window(&cfg, 4);
        assert_eq!(m.forward(&w).unwrap(), m.forward(&w).unwrap());
        let mut c = ForwardCache::new();
        let run = |seed| {
            let mut c = ForwardCache::new();
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            m.forward_cached(&w, &mut c, Some(&mut rng)).unwrap()
        };
        assert_eq!(run(11), run(11));
        let _ = m.forward_cached(&w, &mut c, None::<&mut ChaCha8Rng>).unwrap();
    }
}
