//! Sample-by-sample inference.
//!
//! [`TcnModel::forward`] recomputes every intermediate column of a window on
//! each call. Consecutive windows share all but one column per layer, so a
//! streaming evaluator keeps the recent activations of every layer and
//! computes only the newest column. The per-output summation order matches
//! the windowed pass, so results are bitwise identical.

use super::conv::dot;
use super::{NnError, TcnModel, TcnOutput};

/// The last `cap` columns of a `ch`-channel activation sequence.
#[derive(Debug, Clone)]
struct History {
    ch: usize,
    cap: usize,
    /// Slot-major: slot `s` holds `data[s * ch..(s + 1) * ch]`.
    data: Vec<f64>,
    next: usize,
    filled: usize,
}

impl History {
    fn new(ch: usize, cap: usize) -> Self {
        Self { ch, cap, data: vec![0.0; ch * cap], next: 0, filled: 0 }
    }

    fn push(&mut self, col: &[f64]) {
        let s = self.next;
        self.data[s * self.ch..(s + 1) * self.ch].copy_from_slice(col);
        self.next = (s + 1) % self.cap;
        self.filled = (self.filled + 1).min(self.cap);
    }

    /// Column `lag` steps before the newest.
    fn col(&self, lag: usize) -> &[f64] {
        let s = (self.next + 2 * self.cap - 1 - lag) % self.cap;
        &self.data[s * self.ch..(s + 1) * self.ch]
    }

    fn full(&self) -> bool {
        self.filled == self.cap
    }

    fn clear(&mut self) {
        self.next = 0;
        self.filled = 0;
    }
}

#[derive(Debug, Clone)]
struct BlockState {
    input: History,
    a1: History,
}

/// Rolling activations of a [`TcnModel`], fed one input column at a time.
#[derive(Debug, Clone)]
pub struct StreamState {
    k: usize,
    blocks: Vec<BlockState>,
    gathered: Vec<f64>,
    y1: Vec<f64>,
    out: Vec<f64>,
    pushed: usize,
}

impl StreamState {
    pub fn new(model: &TcnModel) -> Self {
        let k = model.config().kernel_size;
        let blocks = model
            .layout()
            .blocks
            .iter()
            .map(|b| {
                let cap = (k - 1) * b.dilation + 1;
                BlockState { input: History::new(b.in_channels, cap), a1: History::new(b.out_channels, cap) }
            })
            .collect();
        let ch = model.config().channels;
        Self { k, blocks, gathered: Vec::new(), y1: vec![0.0; ch], out: vec![0.0; ch], pushed: 0 }
    }

    /// Forgets all history; the next output comes after a full receptive
    /// field of new columns.
    pub fn reset(&mut self) {
        for b in &mut self.blocks {
            b.input.clear();
            b.a1.clear();
        }
        self.pushed = 0;
    }

    /// Columns pushed since the last reset.
    pub fn pushed(&self) -> usize {
        self.pushed
    }

    /// Appends one input column and returns the output for the window
    /// ending at it, once a full receptive field has been seen.
    pub fn push(&mut self, model: &TcnModel, x: &[f64]) -> Result<Option<TcnOutput>, NnError> {
        let inputs = model.config().input_channels;
        if x.len() != inputs || self.blocks.len() != model.layout().blocks.len() {
            return Err(NnError::ShapeMismatch(format!(
                "stream expects {inputs} channels for this model, got {}",
                x.len()
            )));
        }
        self.pushed += 1;
        let params = model.params();
        let k = self.k;
        self.blocks[0].input.push(x);
        for i in 0..self.blocks.len() {
            let bl = &model.layout().blocks[i];
            let d = bl.dilation;
            let st = &mut self.blocks[i];
            if !st.input.full() {
                return Ok(None);
            }
            conv_newest(
                &st.input,
                &params[bl.conv1_w.clone()],
                &params[bl.conv1_b.clone()],
                k,
                d,
                &mut self.gathered,
                &mut self.y1,
            );
            relu(&mut self.y1);
            st.a1.push(&self.y1);
            if !st.a1.full() {
                return Ok(None);
            }
            conv_newest(
                &st.a1,
                &params[bl.conv2_w.clone()],
                &params[bl.conv2_b.clone()],
                k,
                d,
                &mut self.gathered,
                &mut self.out,
            );
            relu(&mut self.out);
            let x_now = st.input.col(0);
            match &bl.proj {
                Some((w, b)) => {
                    let (w, b) = (&params[w.clone()], &params[b.clone()]);
                    let n = x_now.len();
                    for (o, v) in self.out.iter_mut().enumerate() {
                        let mut s = b[o];
                        for (wv, xv) in w[o * n..(o + 1) * n].iter().zip(x_now) {
                            s += wv * xv;
                        }
                        *v += s;
                    }
                }
                None => {
                    for (v, s) in self.out.iter_mut().zip(x_now) {
                        *v += s;
                    }
                }
            }
            if let Some(next) = self.blocks.get_mut(i + 1) {
                next.input.push(&self.out);
            }
        }
        let layout = model.layout();
        let torque = dot(&params[layout.torque_w.clone()], &self.out) + params[layout.torque_b.start];
        let ch = self.out.len();
        let stance_logits = layout.stance.as_ref().map(|(w, b)| {
            let (w, b) = (&params[w.clone()], &params[b.clone()]);
            [dot(&w[..ch], &self.out) + b[0], dot(&w[ch..], &self.out) + b[1]]
        });
        Ok(Some(TcnOutput { torque, stance_logits }))
    }
}

fn relu(v: &mut [f64]) {
    for x in v {
        *x = x.max(0.0);
    }
}

/// Newest output column of a valid dilated convolution over `h`, summed
/// in the `[in][tap]` order used by the windowed pass.
fn conv_newest(h: &History, w: &[f64], b: &[f64], k: usize, d: usize, gathered: &mut Vec<f64>, y: &mut [f64]) {
    gathered.clear();
    gathered.resize(h.ch * k, 0.0);
    for j in 0..k {
        let col = h.col((k - 1 - j) * d);
        for (c, &v) in col.iter().enumerate() {
            gathered[c * k + j] = v;
        }
    }
    let n = gathered.len();
    for (o, yv) in y.iter_mut().enumerate() {
        let mut s = b[o];
        for (wv, xv) in w[o * n..(o + 1) * n].iter().zip(gathered.iter()) {
            s += wv * xv;
        }
        *yv = s;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nn::{HeadMode, Mat, ModelConfig};

    fn signal(t: usize, c: usize) -> f64 {
        ((t as f64) * 0.13 + c as f64 * 0.7).sin() + 0.1 * c as f64
    }

    #[test]
    fn matches_windowed_forward_bitwise() {
        for heads in [HeadMode::DualOutput, HeadMode::SingleOutput] {
            let model = TcnModel::init(ModelConfig::new(3, 6, 5, 4, heads).unwrap(), 11).unwrap();
            let h = model.receptive_field();
            let mut st = StreamState::new(&model);
            for t in 0..h + 40 {
                let col: Vec<f64> = (0..4).map(|c| signal(t, c)).collect();
                let out = st.push(&model, &col).unwrap();
                if t + 1 < h {
                    assert!(out.is_none());
                    continue;
                }
                let rows: Vec<Vec<f64>> = (0..4).map(|c| (t + 1 - h..=t).map(|s| signal(s, c)).collect()).collect();
                let want = model.forward(&Mat::from_rows(&rows)).unwrap();
                assert_eq!(out.unwrap(), want, "t = {t}");
            }
        }
    }

    #[test]
    fn reset_waits_for_full_window() {
        let model = TcnModel::init(ModelConfig::new(2, 4, 3, 2, HeadMode::DualOutput).unwrap(), 2).unwrap();
        let h = model.receptive_field();
        let mut st = StreamState::new(&model);
        for _ in 0..h {
            st.push(&model, &[0.5, -0.5]).unwrap();
        }
        st.reset();
        for i in 0..h {
            assert_eq!(st.push(&model, &[1.0, 2.0]).unwrap().is_some(), i + 1 == h);
        }
    }

    #[test]
    fn rejects_wrong_width() {
        let model = TcnModel::init(ModelConfig::new(2, 4, 3, 2, HeadMode::DualOutput).unwrap(), 2).unwrap();
        let mut st = StreamState::new(&model);
        assert!(st.push(&model, &[1.0]).is_err());
    }
}
