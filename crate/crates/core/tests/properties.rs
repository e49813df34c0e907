use ankle_tcn::data::Standardizer;
use ankle_tcn::loss::LossState;
use ankle_tcn::metrics::regression_metrics;
use ankle_tcn::runtime::{CommandFlags, CommandFrame, FrameError, RingBuffer, SensorFrame, FRAME_VERSION};
use proptest::prelude::*;

fn sensor_frame() -> impl Strategy<Value = SensorFrame> {
    (any::<u16>(), any::<u32>(), prop::array::uniform16(-1e4f32..1e4f32))
        .prop_map(|(seq, ts, ch)| SensorFrame::new(seq, ts, ch))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(10_000))]

    #[test]
    fn any_single_bit_flip_fails_crc(f in sensor_frame(), bit in 0usize..74 * 8) {
        let mut b = f.encode();
        b[bit / 8] ^= 1 << (bit % 8);
        let rejected = matches!(SensorFrame::decode(&b), Err(FrameError::CrcMismatch { .. }));
        prop_assert!(rejected);
    }
}

proptest! {
    #[test]
    fn sensor_frame_round_trip(f in sensor_frame()) {
        prop_assert_eq!(SensorFrame::decode(&f.encode()).unwrap(), f);
    }

    #[test]
    fn command_frame_round_trip(seq in any::<u16>(), ts in any::<u32>(), t in -100f32..100f32, e in -5f32..5f32, flags in 0u8..8) {
        let c = CommandFrame { version: FRAME_VERSION, sequence: seq, timestamp_us: ts, torque_nm: t, estimate_nmkg: e, flags: CommandFlags(flags) };
        prop_assert_eq!(CommandFrame::decode(&c.encode()).unwrap(), c);
    }

    #[test]
    fn truncated_frames_rejected(f in sensor_frame(), len in 0usize..74) {
        let b = f.encode();
        let truncated = matches!(SensorFrame::decode(&b[..len]), Err(FrameError::Truncated { .. }));
        prop_assert!(truncated);
    }

    #[test]
    fn standardizer_inverts(
        stats in prop::collection::vec((-50.0f64..50.0, 0.01f64..20.0), 1..20),
        xs in prop::collection::vec(-1e3f64..1e3, 20),
    ) {
        let (mean, std): (Vec<f64>, Vec<f64>) = stats.into_iter().unzip();
        let s = Standardizer::from_parts(mean.clone(), std).unwrap();
        for c in 0..mean.len() {
            for &x in &xs {
                let back = s.invert_value(c, s.apply_value(c, x));
                prop_assert!((back - x).abs() <= 1e-6 * (1.0 + x.abs()));
            }
        }
    }

    #[test]
    fn regression_metric_invariants(pairs in prop::collection::vec((-3.0f64..3.0, -3.0f64..3.0), 2..200)) {
        let (p, y): (Vec<f64>, Vec<f64>) = pairs.into_iter().unzip();
        let m = regression_metrics(&p, &y).unwrap();
        prop_assert!(m.mae.0 >= 0.0 && m.rmse.0 + 1e-12 >= m.mae.0);
        if m.r2_defined {
            prop_assert!(m.r2 <= 1.0 + 1e-12);
        }
        let perfect = regression_metrics(&y, &y).unwrap();
        prop_assert_eq!(perfect.mae.0, 0.0);
        prop_assert_eq!(perfect.rmse.0, 0.0);
        // Errors are translation invariant.
        let shift = |v: &[f64]| v.iter().map(|x| x + 5.0).collect::<Vec<_>>();
        let s = regression_metrics(&shift(&p), &shift(&y)).unwrap();
        prop_assert!((s.rmse.0 - m.rmse.0).abs() < 1e-9);
    }

    #[test]
    fn ema_stays_within_observed_range(losses in prop::collection::vec(1e-6f64..1e6, 1..100), alpha in 0.01f64..1.0) {
        let mut s = LossState::new(alpha).unwrap();
        let (mut lo, mut hi) = (f64::INFINITY, 0.0f64);
        for &l in &losses {
            let e = s.ema_update(0, l).unwrap();
            lo = lo.min(l);
            hi = hi.max(l);
            prop_assert!(e >= lo * (1.0 - 1e-12) && e <= hi * (1.0 + 1e-12));
        }
    }

    #[test]
    fn ring_window_is_latest_history(cap in 1usize..70, n in 0usize..300) {
        let mut r = RingBuffer::new(2, cap);
        let mut hist: Vec<f64> = Vec::new();
        for i in 0..n {
            let v = i as f64 * 0.25 - 7.0;
            hist.push(v);
            let ready = r.push(&[v, -v]);
            prop_assert_eq!(ready, hist.len() >= cap);
        }
        if n >= cap {
            prop_assert_eq!(r.channel(0), &hist[n - cap..]);
        }
    }

}
