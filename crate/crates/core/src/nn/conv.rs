use rand::Rng;

use super::{Mat, NnError};

/// Borrowed view of one residual block's parameters.
///
/// Conv weights are laid out `[out][in][k]`, the projection `[out][in]`.
#[derive(Debug, Clone, Copy)]
pub struct BlockParams<'a> {
    pub in_channels: usize,
    pub out_channels: usize,
    pub kernel_size: usize,
    pub conv1_w: &'a [f64],
    pub conv1_b: &'a [f64],
    pub conv2_w: &'a [f64],
    pub conv2_b: &'a [f64],
    pub proj: Option<(&'a [f64], &'a [f64])>,
}

fn check_conv_shapes(x: &Mat, w: &[f64], b: &[f64], out_ch: usize, k: usize) -> Result<(), NnError> {
    if k == 0 || x.cols() == 0 {
        return Err(NnError::ShapeMismatch("kernel size and sequence length must be >= 1".into()));
    }
    if w.len() != out_ch * x.rows() * k {
        return Err(NnError::ShapeMismatch(format!(
            "weights have {} entries, expected {out_ch}x{}x{k}",
            w.len(),
            x.rows()
        )));
    }
    if b.len() != out_ch {
        return Err(NnError::ShapeMismatch(format!("bias has {} entries, expected {out_ch}", b.len())));
    }
    Ok(())
}

/// Causal dilated convolution with `(k - 1) * dilation` zeros of left
/// padding, so the output has the input's length and `y[:, t]` only reads
/// `x[:, ..=t]`. Tap `k - 1` multiplies the newest sample.
pub fn conv1d_causal_forward(
    x: &Mat,
    weights: &[f64],
    bias: &[f64],
    out_channels: usize,
    kernel_size: usize,
    dilation: usize,
) -> Result<Mat, NnError> {
    check_conv_shapes(x, weights, bias, out_channels, kernel_size)?;
    if dilation == 0 {
        return Err(NnError::ShapeMismatch("dilation must be >= 1".into()));
    }
    let span = (kernel_size - 1) * dilation;
    let t_len = x.cols();
    let mut padded = Mat::zeros(x.rows(), t_len + span);
    for c in 0..x.rows() {
        padded.row_mut(c)[span..].copy_from_slice(x.row(c));
    }
    let mut y = Mat::zeros(out_channels, t_len);
    conv_valid_forward(&padded, 0, weights, bias, kernel_size, dilation, &mut y);
    Ok(y)
}

/// One residual block on a full-length sequence:
/// `relu(conv2(relu(conv1(x)))) + proj(x)` with dropout after each
/// activation when `training` is set.
pub fn residual_block_forward<R: Rng + ?Sized>(
    x: &Mat,
    block: &BlockParams<'_>,
    dilation: usize,
    dropout_p: f64,
    training: bool,
    rng: &mut R,
) -> Result<Mat, NnError> {
    if x.rows() != block.in_channels {
        return Err(NnError::ShapeMismatch(format!(
            "block expects {} input channels, got {}",
            block.in_channels,
            x.rows()
        )));
    }
    let k = block.kernel_size;
    let mut h1 = conv1d_causal_forward(x, block.conv1_w, block.conv1_b, block.out_channels, k, dilation)?;
    relu_dropout_inplace(&mut h1, dropout_p, training, rng);
    let mut h2 = conv1d_causal_forward(&h1, block.conv2_w, block.conv2_b, block.out_channels, k, dilation)?;
    relu_dropout_inplace(&mut h2, dropout_p, training, rng);
    let skip = match block.proj {
        Some((w, b)) => conv1d_causal_forward(x, w, b, block.out_channels, 1, 1)?,
        None if block.in_channels == block.out_channels => x.clone(),
        None => return Err(NnError::ShapeMismatch("channel counts differ but no projection given".into())),
    };
    for (o, s) in h2.as_mut_slice().iter_mut().zip(skip.as_slice()) {
        *o += s;
    }
    Ok(h2)
}

fn relu_dropout_inplace<R: Rng + ?Sized>(m: &mut Mat, p: f64, training: bool, rng: &mut R) {
    let scale = 1.0 / (1.0 - p);
    for v in m.as_mut_slice() {
        *v = v.max(0.0);
        if training && p > 0.0 {
            *v = if rng.random::<f64>() < p { 0.0 } else { *v * scale };
        }
    }
}

/// Unpadded ("valid") dilated convolution.
///
/// `y[o][p] = b[o] + sum_{c,j} w[o][c][j] * x[c][x_off + p + j*d]` for
/// `p < y.cols()`. The caller sizes `y`; `x` must hold
/// `x_off + y.cols() + (k-1)*d` columns.
pub(crate) fn conv_valid_forward(x: &Mat, x_off: usize, w: &[f64], b: &[f64], k: usize, d: usize, y: &mut Mat) {
    let in_ch = x.rows();
    let len = y.cols();
    debug_assert!(x_off + len + (k - 1) * d <= x.cols());
    for o in 0..y.rows() {
        let yrow = y.row_mut(o);
        yrow.fill(b[o]);
        let wo = &w[o * in_ch * k..(o + 1) * in_ch * k];
        for c in 0..in_ch {
            let xrow = x.row(c);
            for j in 0..k {
                let wv = wo[c * k + j];
                let start = x_off + j * d;
                axpy(wv, &xrow[start..start + len], yrow);
            }
        }
    }
}

/// Accumulates parameter gradients (and optionally the input gradient) of
/// [`conv_valid_forward`].
#[allow(clippy::too_many_arguments)]
pub(crate) fn conv_valid_backward(
    x: &Mat,
    x_off: usize,
    w: &[f64],
    k: usize,
    d: usize,
    dy: &Mat,
    dw: &mut [f64],
    db: &mut [f64],
    mut dx: Option<&mut Mat>,
) {
    let in_ch = x.rows();
    let len = dy.cols();
    for o in 0..dy.rows() {
        let g = dy.row(o);
        db[o] += g.iter().sum::<f64>();
        let base = o * in_ch * k;
        for c in 0..in_ch {
            let xrow = x.row(c);
            for j in 0..k {
                let start = x_off + j * d;
                dw[base + c * k + j] += dot(g, &xrow[start..start + len]);
            }
            if let Some(dx) = dx.as_deref_mut() {
                let dxrow = dx.row_mut(c);
                for j in 0..k {
                    let start = x_off + j * d;
                    axpy(w[base + c * k + j], g, &mut dxrow[start..start + len]);
                }
            }
        }
    }
}

#[inline]
pub(crate) fn axpy(a: f64, x: &[f64], y: &mut [f64]) {
    for (yv, xv) in y.iter_mut().zip(x) {
        *yv += a * xv;
    }
}

/// Dot product with eight independent accumulators; the summation order
/// is fixed so results are reproducible.
#[inline]
pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    let n = a.len().min(b.len());
    let (a, b) = (&a[..n], &b[..n]);
    let mut acc = [0.0f64; 8];
    let ca = a.chunks_exact(8);
    let cb = b.chunks_exact(8);
    let (ra, rb) = (ca.remainder(), cb.remainder());
    for (xa, xb) in ca.zip(cb) {
        for l in 0..8 {
            acc[l] += xa[l] * xb[l];
        }
    }
    let mut s = ((acc[0] + acc[1]) + (acc[2] + acc[3])) + ((acc[4] + acc[5]) + (acc[6] + acc[7]));
    for (xa, xb) in ra.iter().zip(rb) {
        s += xa * xb;
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn row(v: &[f64]) -> Mat {
        Mat::from_vec(1, v.len(), v.to_vec())
    }

    #[test]
    fn identity_kernel_is_identity() {
        let x = Mat::from_rows(&[vec![1.0, -2.0, 3.0], vec![0.5, 0.0, 4.0]]);
        let w = [1.0, 0.0, 0.0, 1.0];
        let y = conv1d_causal_forward(&x, &w, &[0.0, 0.0], 2, 1, 1).unwrap();
        assert_eq!(y, x);
    }

    #[test]
    fn causal_conv_hand_examples() {
        let y = conv1d_causal_forward(&row(&[1.0, 2.0, 3.0]), &[1.0, 1.0], &[0.0], 1, 2, 1).unwrap();
        assert_eq!(y.row(0), &[1.0, 3.0, 5.0]);
        let y = conv1d_causal_forward(&row(&[1.0, 0.0, 0.0, 0.0, 1.0]), &[1.0, 1.0], &[0.0], 1, 2, 2).unwrap();
        assert_eq!(y.row(0), &[1.0, 0.0, 1.0, 0.0, 1.0]);
    }

    #[test]
    fn newest_tap_is_last() {
        let y = conv1d_causal_forward(&row(&[1.0, 2.0, 3.0]), &[0.0, 1.0], &[0.5], 1, 2, 1).unwrap();
        assert_eq!(y.row(0), &[1.5, 2.5, 3.5]);
        let y = conv1d_causal_forward(&row(&[1.0, 2.0, 3.0]), &[1.0, 0.0], &[0.0], 1, 2, 1).unwrap();
        assert_eq!(y.row(0), &[0.0, 1.0, 2.0]);
    }

    #[test]
    fn conv_shape_errors() {
        let x = row(&[1.0, 2.0]);
        assert!(matches!(conv1d_causal_forward(&x, &[1.0], &[0.0], 1, 2, 1), Err(NnError::ShapeMismatch(_))));
        assert!(conv1d_causal_forward(&x, &[1.0, 1.0], &[0.0, 0.0], 1, 2, 1).is_err());
        assert!(conv1d_causal_forward(&Mat::zeros(1, 0), &[1.0], &[0.0], 1, 1, 1).is_err());
    }

    #[test]
    fn zero_block_is_pure_skip() {
        let x = Mat::from_rows(&[vec![1.0, -2.0, 3.0, 0.25], vec![0.5, 0.0, -4.0, 2.0]]);
        let zw = vec![0.0; 2 * 2 * 3];
        let zb = vec![0.0; 2];
        let block = BlockParams {
            in_channels: 2,
            out_channels: 2,
            kernel_size: 3,
            conv1_w: &zw,
            conv1_b: &zb,
            conv2_w: &zw,
            conv2_b: &zb,
            proj: None,
        };
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let y = residual_block_forward(&x, &block, 2, 0.0, false, &mut rng).unwrap();
        assert_eq!(y, x);
    }

    #[test]
    fn unit_pointwise_block_doubles_nonnegative_input() {
        let x = row(&[0.0, 1.0, 2.5, 7.0]);
        let block = BlockParams {
            in_channels: 1,
            out_channels: 1,
            kernel_size: 1,
            conv1_w: &[1.0],
            conv1_b: &[0.0],
            conv2_w: &[1.0],
            conv2_b: &[0.0],
            proj: None,
        };
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let y = residual_block_forward(&x, &block, 1, 0.0, false, &mut rng).unwrap();
        assert_eq!(y.row(0), &[0.0, 2.0, 5.0, 14.0]);
        let y_train = residual_block_forward(&x, &block, 1, 0.0, true, &mut rng).unwrap();
        assert_eq!(y, y_train);
    }

    #[test]
    fn dot_matches_naive_sum() {
        let a: Vec<f64> = (0..37).map(|i| (i as f64 * 0.37).sin()).collect();
        let b: Vec<f64> = (0..37).map(|i| (i as f64 * 0.11).cos()).collect();
        let naive: f64 = a.iter().zip(&b).map(|(x, y)| x * y).sum();
        assert!((dot(&a, &b) - naive).abs() < 1e-12);
    }
}
