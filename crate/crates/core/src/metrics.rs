//! Regression, phase-classification and stride-peak metrics.

use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum MetricsError {
    #[error("empty input")]
    Empty,
    #[error("length mismatch ({0} vs {1})")]
    LengthMismatch(usize, usize),
    #[error("need at least one complete stride")]
    NoStrides,
    #[error("stride counts differ ({pred} predicted vs {truth} ground truth)")]
    StrideCountMismatch { pred: usize, truth: usize },
    #[error("io error: {0}")]
    Io(String),
}

/// Torque normalized by body mass.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Default, Serialize, Deserialize)]
#[serde(transparent)]
pub struct NmPerKg(pub f64);

/// Position within a stride, 0 at initial contact.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Default, Serialize, Deserialize)]
#[serde(transparent)]
pub struct GaitCyclePct(pub f64);

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RegressionMetrics {
    pub mae: NmPerKg,
    pub rmse: NmPerKg,
    /// NaN when the target is constant.
    pub r2: f64,
    pub r2_defined: bool,
}

fn check(a: usize, b: usize) -> Result<(), MetricsError> {
    if a != b {
        return Err(MetricsError::LengthMismatch(a, b));
    }
    if a == 0 {
        return Err(MetricsError::Empty);
    }
    Ok(())
}

pub fn regression_metrics(pred: &[f64], target: &[f64]) -> Result<RegressionMetrics, MetricsError> {
    check(pred.len(), target.len())?;
    let n = pred.len() as f64;
    let mean = target.iter().sum::<f64>() / n;
    let (mut abs, mut ss_res, mut ss_tot) = (0.0, 0.0, 0.0);
    for (p, t) in pred.iter().zip(target) {
        abs += (p - t).abs();
        ss_res += (p - t) * (p - t);
        ss_tot += (t - mean) * (t - mean);
    }
    let r2_defined = ss_tot > 0.0;
    Ok(RegressionMetrics {
        mae: NmPerKg(abs / n),
        rmse: NmPerKg((ss_res / n).sqrt()),
        r2: if r2_defined { 1.0 - ss_res / ss_tot } else { f64::NAN },
        r2_defined,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StanceSwingRmse {
    /// `None` when no sample carries the label.
    pub stance: Option<NmPerKg>,
    pub swing: Option<NmPerKg>,
}

pub fn stance_swing_rmse(pred: &[f64], target: &[f64], stance: &[bool]) -> Result<StanceSwingRmse, MetricsError> {
    check(pred.len(), target.len())?;
    check(pred.len(), stance.len())?;
    let mut acc = [(0.0, 0usize); 2];
    for ((p, t), &s) in pred.iter().zip(target).zip(stance) {
        let slot = &mut acc[usize::from(!s)];
        slot.0 += (p - t) * (p - t);
        slot.1 += 1;
    }
    let rmse = |(sum, n): (f64, usize)| (n > 0).then(|| NmPerKg((sum / n as f64).sqrt()));
    Ok(StanceSwingRmse { stance: rmse(acc[0]), swing: rmse(acc[1]) })
}

/// Fraction of samples whose arg-max class (0 stance, 1 swing) matches the
/// label. NaN for empty input.
pub fn phase_accuracy(logits: &[[f64; 2]], stance: &[bool]) -> f64 {
    let n = logits.len().min(stance.len());
    if n == 0 {
        return f64::NAN;
    }
    let hits = logits.iter().zip(stance).filter(|(l, &s)| (l[0] >= l[1]) == s).count();
    hits as f64 / n as f64
}

/// Peak dorsiflexion and plantarflexion of one stride.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PeakRow {
    pub stride_start: usize,
    pub stride_end: usize,
    pub df_magnitude: NmPerKg,
    pub df_timing: GaitCyclePct,
    pub pf_magnitude: NmPerKg,
    pub pf_timing: GaitCyclePct,
    /// Set when the DF window never goes below zero; the magnitude is then
    /// recorded as 0 at the window minimum.
    pub df_missing: bool,
}

pub const DF_WINDOW_PCT: (f64, f64) = (0.0, 30.0);
pub const PF_WINDOW_PCT: (f64, f64) = (20.0, 80.0);

fn extremum(torque: &[f64], start: usize, len: usize, window: (f64, f64), max: bool) -> (usize, f64) {
    let lo = (window.0 / 100.0 * len as f64).ceil() as usize;
    let hi = ((window.1 / 100.0 * len as f64).floor() as usize).min(len - 1);
    let mut best = (lo, torque[start + lo]);
    for i in lo..=hi {
        let v = torque[start + i];
        if (max && v > best.1) || (!max && v < best.1) {
            best = (i, v);
        }
    }
    best
}

/// One row per consecutive boundary pair. `torque` uses the
/// plantarflexion-positive convention.
pub fn detect_peaks(torque: &[f64], boundaries: &[usize]) -> Result<Vec<PeakRow>, MetricsError> {
    if boundaries.len() < 2 {
        return Err(MetricsError::NoStrides);
    }
    boundaries
        .windows(2)
        .map(|w| {
            let (start, end) = (w[0], w[1]);
            if end <= start || end > torque.len() {
                return Err(MetricsError::LengthMismatch(end, torque.len()));
            }
            let len = end - start;
            let pct = |i: usize| GaitCyclePct(100.0 * i as f64 / len as f64);
            let (di, dv) = extremum(torque, start, len, DF_WINDOW_PCT, false);
            let (pi, pv) = extremum(torque, start, len, PF_WINDOW_PCT, true);
            let df_missing = dv >= 0.0;
            Ok(PeakRow {
                stride_start: start,
                stride_end: end,
                df_magnitude: NmPerKg(if df_missing { 0.0 } else { dv }),
                df_timing: pct(di),
                pf_magnitude: NmPerKg(pv),
                pf_timing: pct(pi),
                df_missing,
            })
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeanStd {
    pub mean: f64,
    /// Sample standard deviation, 0 for a single value.
    pub std: f64,
}

impl MeanStd {
    pub fn of(values: &[f64]) -> Self {
        let n = values.len();
        if n == 0 {
            return Self { mean: f64::NAN, std: f64::NAN };
        }
        let mean = values.iter().sum::<f64>() / n as f64;
        let std = if n > 1 {
            (values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1) as f64).sqrt()
        } else {
            0.0
        };
        Self { mean, std }
    }
}

impl std::fmt::Display for MeanStd {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{:.3} ± {:.3}", self.mean, self.std)
    }
}

/// Absolute per-stride errors of predicted against true peaks.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PeakErrors {
    pub strides: usize,
    pub df_magnitude: MeanStd,
    pub df_timing: MeanStd,
    pub pf_magnitude: MeanStd,
    pub pf_timing: MeanStd,
    pub df_timing_max: GaitCyclePct,
    pub pf_timing_max: GaitCyclePct,
}

pub fn peak_errors(pred: &[PeakRow], truth: &[PeakRow]) -> Result<PeakErrors, MetricsError> {
    if pred.len() != truth.len() {
        return Err(MetricsError::StrideCountMismatch { pred: pred.len(), truth: truth.len() });
    }
    if pred.is_empty() {
        return Err(MetricsError::NoStrides);
    }
    let col =
        |f: &dyn Fn(&PeakRow, &PeakRow) -> f64| -> Vec<f64> { pred.iter().zip(truth).map(|(p, t)| f(p, t)).collect() };
    let dfm = col(&|p, t| (p.df_magnitude.0 - t.df_magnitude.0).abs());
    let dft = col(&|p, t| (p.df_timing.0 - t.df_timing.0).abs());
    let pfm = col(&|p, t| (p.pf_magnitude.0 - t.pf_magnitude.0).abs());
    let pft = col(&|p, t| (p.pf_timing.0 - t.pf_timing.0).abs());
    let max = |v: &[f64]| GaitCyclePct(v.iter().cloned().fold(0.0, f64::max));
    Ok(PeakErrors {
        strides: pred.len(),
        df_magnitude: MeanStd::of(&dfm),
        df_timing: MeanStd::of(&dft),
        pf_magnitude: MeanStd::of(&pfm),
        pf_timing: MeanStd::of(&pft),
        df_timing_max: max(&dft),
        pf_timing_max: max(&pft),
    })
}

pub fn write_peak_csv(rows: &[PeakRow], path: impl AsRef<Path>) -> Result<(), MetricsError> {
    let io = |e: std::io::Error| MetricsError::Io(e.to_string());
    let mut f = std::io::BufWriter::new(std::fs::File::create(path).map_err(io)?);
    writeln!(f, "stride_start,stride_end,df_nmkg,df_pct_gc,pf_nmkg,pf_pct_gc,df_missing").map_err(io)?;
    for r in rows {
        writeln!(
            f,
            "{},{},{},{},{},{},{}",
            r.stride_start,
            r.stride_end,
            r.df_magnitude.0,
            r.df_timing.0,
            r.pf_magnitude.0,
            r.pf_timing.0,
            u8::from(r.df_missing)
        )
        .map_err(io)?;
    }
    f.flush().map_err(io)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};

    #[test]
    fn regression_examples() {
        let t = [1.0, -2.0, 0.5, 3.0];
        let m = regression_metrics(&t, &t).unwrap();
        assert_eq!((m.mae.0, m.rmse.0, m.r2), (0.0, 0.0, 1.0));
        let mean = t.iter().sum::<f64>() / 4.0;
        assert!(regression_metrics(&[mean; 4], &t).unwrap().r2.abs() < 1e-15);
        let m = regression_metrics(&[0.0; 3], &[1.0, -1.0, 0.0]).unwrap();
        assert!((m.mae.0 - 2.0 / 3.0).abs() < 1e-15);
        assert!((m.rmse.0 - (2.0f64 / 3.0).sqrt()).abs() < 1e-15);
        assert_eq!(m.r2, 0.0);
        let c = regression_metrics(&[1.0, 2.0], &[1.0, 1.0]).unwrap();
        assert!(c.r2.is_nan() && !c.r2_defined);
        assert_eq!(regression_metrics(&[], &[]), Err(MetricsError::Empty));
    }

    #[test]
    fn stance_swing_split() {
        let t = [1.0, 2.0, 3.0, 4.0];
        let s = [true, true, false, false];
        let r = stance_swing_rmse(&t, &t, &s).unwrap();
        assert_eq!((r.stance, r.swing), (Some(NmPerKg(0.0)), Some(NmPerKg(0.0))));
        let r = stance_swing_rmse(&[1.0, 2.0, 4.0, 4.0], &t, &s).unwrap();
        assert_eq!(r.stance, Some(NmPerKg(0.0)));
        assert_eq!(r.swing, Some(NmPerKg((0.5f64).sqrt())));
        let r = stance_swing_rmse(&[2.0, 2.0, 3.0, 6.0], &t, &s).unwrap();
        assert_eq!(r.stance, Some(NmPerKg((0.5f64).sqrt())));
        assert_eq!(r.swing, Some(NmPerKg(2.0f64.sqrt())));
        assert_eq!(stance_swing_rmse(&t, &t, &[true; 4]).unwrap().swing, None);
    }

    #[test]
    fn phase_accuracy_examples() {
        let labels = [true, false, true, false];
        let perfect: Vec<[f64; 2]> = labels.iter().map(|&s| if s { [1.0, 0.0] } else { [0.0, 1.0] }).collect();
        assert_eq!(phase_accuracy(&perfect, &labels), 1.0);
        let inverted: Vec<[f64; 2]> = perfect.iter().map(|l| [l[1], l[0]]).collect();
        assert_eq!(phase_accuracy(&inverted, &labels), 0.0);
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(1);
        let n = 20_000;
        let labels: Vec<bool> = (0..n).map(|i| i % 2 == 0).collect();
        let logits: Vec<[f64; 2]> = (0..n).map(|_| [rng.random::<f64>(), rng.random::<f64>()]).collect();
        assert!((phase_accuracy(&logits, &labels) - 0.5).abs() < 0.05);
    }

    fn template_stride(len: usize) -> Vec<f64> {
        (0..len)
            .map(|i| {
                let phi = i as f64 / len as f64;
                -0.3 * (-0.5 * ((phi - 0.05) / 0.03f64).powi(2)).exp()
                    + 1.5 * (-0.5 * ((phi - 0.45) / 0.1f64).powi(2)).exp()
            })
            .collect()
    }

    #[test]
    fn peaks_of_template() {
        let mut tq = template_stride(100);
        tq.extend(template_stride(100));
        let rows = detect_peaks(&tq, &[0, 100, 200]).unwrap();
        assert_eq!(rows.len(), 2);
        assert!((rows[0].df_timing.0 - 5.0).abs() <= 1.0);
        assert!((rows[0].pf_timing.0 - 45.0).abs() <= 1.0);
        assert!(!rows[0].df_missing && rows[0].df_magnitude.0 < 0.0);
        assert_eq!((rows[0].df_magnitude, rows[0].pf_timing), (rows[1].df_magnitude, rows[1].pf_timing));
    }

    #[test]
    fn pure_bump_flags_missing_df() {
        let tq: Vec<f64> = (0..100).map(|i| (-0.5 * ((i as f64 - 45.0) / 10.0).powi(2)).exp()).collect();
        let rows = detect_peaks(&tq, &[0, 100]).unwrap();
        assert!(rows[0].df_missing);
        assert_eq!(rows[0].df_magnitude.0, 0.0);
        assert_eq!(detect_peaks(&tq, &[0]), Err(MetricsError::NoStrides));
    }

    #[test]
    fn peak_error_examples() {
        let tq = template_stride(100);
        let rows = detect_peaks(&tq, &[0, 100]).unwrap();
        let e = peak_errors(&rows, &rows).unwrap();
        assert_eq!(e.df_timing.mean + e.pf_timing.mean + e.df_magnitude.mean + e.pf_magnitude.mean, 0.0);
        let mut moved = rows.clone();
        moved[0].pf_timing = GaitCyclePct(47.0);
        let mut truth = rows.clone();
        truth[0].pf_timing = GaitCyclePct(45.0);
        assert!((peak_errors(&moved, &truth).unwrap().pf_timing.mean - 2.0).abs() < 1e-12);
        assert!(matches!(peak_errors(&rows, &[]), Err(MetricsError::StrideCountMismatch { .. })));
    }

    #[test]
    fn mean_std_sample() {
        let m = MeanStd::of(&[1.0, 2.0, 3.0]);
        assert_eq!((m.mean, m.std), (2.0, 1.0));
        assert_eq!(MeanStd::of(&[4.0]).std, 0.0);
    }
}
