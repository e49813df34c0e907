mod common;

use ankle_tcn::nn::{HeadMode, Mat, ModelConfig, TcnModel};
use common::*;
use rand_chacha::ChaCha8Rng;

fn columns(m: &Mat, range: std::ops::Range<usize>) -> Mat {
    let rows: Vec<Vec<f64>> = (0..m.rows()).map(|r| m.row(r)[range.clone()].to_vec()).collect();
    Mat::from_rows(&rows)
}

#[test]
fn forward_matches_padded_reference() {
    for heads in [HeadMode::SingleOutput, HeadMode::DualOutput] {
        let model = tiny_model(heads, 11);
        let h = model.receptive_field();
        let x = random_mat(16, h + 40, 5);
        let reference = naive_forward_all(&model, &x);
        for end in h - 1..x.cols() {
            let got = model.forward(&columns(&x, end + 1 - h..end + 1)).unwrap();
            let want = reference[end];
            assert!((got.torque - want.torque).abs() < 1e-12, "t={end}: {} vs {}", got.torque, want.torque);
            match (got.stance_logits, want.stance_logits) {
                (Some(a), Some(b)) => assert!((a[0] - b[0]).abs() < 1e-12 && (a[1] - b[1]).abs() < 1e-12),
                (None, None) => {}
                _ => panic!("head mismatch"),
            }
        }
    }
}

#[test]
fn full_config_forward_matches_reference() {
    let cfg = ModelConfig::full(HeadMode::DualOutput).with_dropout(0.0).unwrap();
    let model = TcnModel::init(cfg, 2).unwrap();
    assert_eq!(model.receptive_field(), 57);
    let x = random_mat(16, 60, 9);
    let reference = naive_forward_all(&model, &x);
    for end in 56..60 {
        let got = model.forward(&columns(&x, end - 56..end + 1)).unwrap();
        assert!((got.torque - reference[end].torque).abs() < 1e-10);
    }
}

#[test]
fn chunked_evaluation_matches_single_windows() {
    let model = tiny_model(HeadMode::DualOutput, 3);
    let h = model.receptive_field();
    let x = random_mat(16, h + 25, 8);
    let mut cache = ankle_tcn::nn::ForwardCache::new();
    let outs = model.forward_seq_cached(&x, &mut cache, None::<&mut ChaCha8Rng>).unwrap();
    assert_eq!(outs.len(), 26);
    for (j, o) in outs.iter().enumerate() {
        let single = model.forward(&columns(&x, j..j + h)).unwrap();
        assert!((o.torque - single.torque).abs() < 1e-12);
    }
}

#[test]
fn chunked_backward_matches_sum_of_window_backwards() {
    use ankle_tcn::nn::{ForwardCache, HeadGrads};
    let model = tiny_model(HeadMode::DualOutput, 4);
    let h = model.receptive_field();
    let x = random_mat(16, h + 6, 2);
    let ups: Vec<HeadGrads> = (0..7)
        .map(|j| HeadGrads { torque: 0.3 - 0.1 * j as f64, stance_logits: Some([0.05 * j as f64, -0.02]) })
        .collect();
    let mut seq = vec![0.0; model.num_params()];
    let mut cache = ForwardCache::new();
    model.forward_seq_cached(&x, &mut cache, None::<&mut ChaCha8Rng>).unwrap();
    model.backward_seq(&cache, &ups, &mut seq).unwrap();
    let mut sum = vec![0.0; model.num_params()];
    for (j, up) in ups.iter().enumerate() {
        model.forward_cached(&columns(&x, j..j + h), &mut cache, None::<&mut ChaCha8Rng>).unwrap();
        model.backward(&cache, up, &mut sum).unwrap();
    }
    for (a, b) in seq.iter().zip(&sum) {
        assert!((a - b).abs() < 1e-12 * (1.0 + b.abs()));
    }
}

#[test]
fn balanced_loss_gradient_matches_finite_differences() {
    for seed in [1, 2] {
        let model = tiny_model(HeadMode::DualOutput, seed);
        let batch = random_batch(model.receptive_field(), 6, seed + 10);
        let err = max_grad_rel_error(&model, &batch, 1e-5);
        assert!(err < 1e-4, "seed {seed}: max relative error {err:e}");
    }
}

#[test]
fn single_output_gradient_matches_finite_differences() {
    let model = tiny_model(HeadMode::SingleOutput, 6);
    let batch = random_batch(model.receptive_field(), 4, 99);
    let err = max_grad_rel_error(&model, &batch, 1e-5);
    assert!(err < 1e-4, "max relative error {err:e}");
}
