//! Second-order Butterworth sections and zero-phase filtering.

use std::f64::consts::{PI, SQRT_2};

use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum DspError {
    #[error("cutoff {cutoff_hz} Hz must lie strictly between 0 and Nyquist ({nyquist_hz} Hz)")]
    InvalidCutoff { cutoff_hz: f64, nyquist_hz: f64 },
    #[error("series of {len} samples is too short for zero-phase filtering (need > {min})")]
    SeriesTooShort { len: usize, min: usize },
}

/// Biquad in direct-form-II-transposed with its two delay states.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Biquad {
    pub b0: f64,
    pub b1: f64,
    pub b2: f64,
    pub a1: f64,
    pub a2: f64,
    z1: f64,
    z2: f64,
}

impl Biquad {
    pub fn new(b0: f64, b1: f64, b2: f64, a1: f64, a2: f64) -> Self {
        Self { b0, b1, b2, a1, a2, z1: 0.0, z2: 0.0 }
    }

    pub fn reset(&mut self) {
        self.z1 = 0.0;
        self.z2 = 0.0;
    }

    /// Copy of the coefficients with cleared state.
    pub fn fresh(&self) -> Self {
        Self::new(self.b0, self.b1, self.b2, self.a1, self.a2)
    }

    pub fn state(&self) -> (f64, f64) {
        (self.z1, self.z2)
    }

    /// `sum(b) / (1 + sum(a))`.
    pub fn dc_gain(&self) -> f64 {
        (self.b0 + self.b1 + self.b2) / (1.0 + self.a1 + self.a2)
    }

    /// `|H(e^{jw})|` at `freq_hz`.
    pub fn magnitude_at(&self, freq_hz: f64, sample_hz: f64) -> f64 {
        let w = 2.0 * PI * freq_hz / sample_hz;
        let (c1, s1) = (w.cos(), -w.sin());
        let (c2, s2) = ((2.0 * w).cos(), -(2.0 * w).sin());
        let num_re = self.b0 + self.b1 * c1 + self.b2 * c2;
        let num_im = self.b1 * s1 + self.b2 * s2;
        let den_re = 1.0 + self.a1 * c1 + self.a2 * c2;
        let den_im = self.a1 * s1 + self.a2 * s2;
        (num_re.hypot(num_im)) / (den_re.hypot(den_im))
    }

    /// Largest pole modulus of `1 + a1 z^-1 + a2 z^-2`.
    pub fn max_pole_radius(&self) -> f64 {
        let disc = self.a1 * self.a1 - 4.0 * self.a2;
        if disc < 0.0 {
            self.a2.sqrt()
        } else {
            let r = disc.sqrt();
            ((-self.a1 + r) / 2.0).abs().max(((-self.a1 - r) / 2.0).abs())
        }
    }

    pub fn is_stable(&self) -> bool {
        self.max_pole_radius() < 1.0
    }

    /// One sample update; no finiteness check.
    #[inline]
    pub fn process(&mut self, x: f64) -> f64 {
        let y = self.b0 * x + self.z1;
        self.z1 = self.b1 * x - self.a1 * y + self.z2;
        self.z2 = self.b2 * x - self.a2 * y;
        y
    }

    /// One sample update. A non-finite input returns `None` and leaves the
    /// state untouched.
    #[inline]
    pub fn step(&mut self, x: f64) -> Option<f64> {
        x.is_finite().then(|| self.process(x))
    }

    /// Sets the delay states to the steady state reached under a constant
    /// input `x`, so the next output equals `dc_gain() * x`.
    pub fn set_steady_state(&mut self, x: f64) {
        let y = self.dc_gain() * x;
        self.z2 = self.b2 * x - self.a2 * y;
        self.z1 = self.b1 * x - self.a1 * y + self.z2;
    }
}

/// Second-order Butterworth low-pass via the bilinear transform with
/// prewarping, so the -3 dB point lands exactly on `cutoff_hz`.
pub fn butter2_design(cutoff_hz: f64, sample_hz: f64) -> Result<Biquad, DspError> {
    let nyquist_hz = sample_hz / 2.0;
    if !(cutoff_hz > 0.0 && cutoff_hz < nyquist_hz) {
        return Err(DspError::InvalidCutoff { cutoff_hz, nyquist_hz });
    }
    let k = (PI * cutoff_hz / sample_hz).tan();
    let k2 = k * k;
    let norm = 1.0 / (1.0 + SQRT_2 * k + k2);
    let b0 = k2 * norm;
    Ok(Biquad::new(b0, 2.0 * b0, b0, 2.0 * (k2 - 1.0) * norm, (1.0 - SQRT_2 * k + k2) * norm))
}

/// Samples of odd-reflection padding on each side in [`filtfilt`].
pub const FILTFILT_PAD: usize = 9;

/// Zero-phase filtering: forward pass, then a pass over the reversed
/// output. Both ends are extended by odd reflection and each pass starts
/// from the steady state of its first sample, so a constant series is
/// returned unchanged.
pub fn filtfilt(filter: &Biquad, x: &[f64]) -> Result<Vec<f64>, DspError> {
    let pad = FILTFILT_PAD;
    if x.len() <= pad {
        return Err(DspError::SeriesTooShort { len: x.len(), min: pad });
    }
    let n = x.len();
    let mut ext = Vec::with_capacity(n + 2 * pad);
    for i in (1..=pad).rev() {
        ext.push(2.0 * x[0] - x[i]);
    }
    ext.extend_from_slice(x);
    for i in 1..=pad {
        ext.push(2.0 * x[n - 1] - x[n - 1 - i]);
    }

    let mut f = filter.fresh();
    f.set_steady_state(ext[0]);
    for v in ext.iter_mut() {
        *v = f.process(*v);
    }
    let mut f = filter.fresh();
    f.set_steady_state(*ext.last().unwrap());
    for v in ext.iter_mut().rev() {
        *v = f.process(*v);
    }
    Ok(ext[pad..pad + n].to_vec())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sine(freq: f64, fs: f64, n: usize) -> Vec<f64> {
        (0..n).map(|i| (2.0 * PI * freq * i as f64 / fs).sin()).collect()
    }

    #[test]
    fn design_has_unity_dc_and_half_power_cutoff() {
        let f = butter2_design(7.0, 100.0).unwrap();
        assert!((f.dc_gain() - 1.0).abs() < 1e-9);
        assert!((f.magnitude_at(7.0, 100.0) - std::f64::consts::FRAC_1_SQRT_2).abs() < 1e-3);
        assert!(f.is_stable());
    }

    #[test]
    fn invalid_cutoffs() {
        assert!(butter2_design(0.0, 100.0).is_err());
        assert!(butter2_design(50.0, 100.0).is_err());
        assert!(butter2_design(-1.0, 100.0).is_err());
        assert!(butter2_design(f64::NAN, 100.0).is_err());
    }

    #[test]
    fn step_converges_and_impulse_sums_to_dc_gain() {
        let mut f = butter2_design(7.0, 100.0).unwrap();
        let mut y = 0.0;
        for _ in 0..500 {
            y = f.step(3.5).unwrap();
        }
        assert!((y - 3.5).abs() < 1e-6);

        let mut f = butter2_design(7.0, 100.0).unwrap();
        let total: f64 = (0..500).map(|i| f.process(if i == 0 { 1.0 } else { 0.0 })).sum();
        assert!((total - f.dc_gain()).abs() < 1e-9);
    }

    #[test]
    fn non_finite_input_freezes_state() {
        let mut f = butter2_design(7.0, 100.0).unwrap();
        f.process(1.0);
        let before = f.state();
        assert_eq!(f.step(f64::NAN), None);
        assert_eq!(f.step(f64::INFINITY), None);
        assert_eq!(f.state(), before);
    }

    #[test]
    fn reset_restores_determinism() {
        let mut f = butter2_design(7.0, 100.0).unwrap();
        let input: Vec<f64> = (0..50).map(|i| (i as f64 * 0.3).sin()).collect();
        let a: Vec<f64> = input.iter().map(|&x| f.process(x)).collect();
        f.reset();
        let b: Vec<f64> = input.iter().map(|&x| f.process(x)).collect();
        assert_eq!(a, b);
    }

    #[test]
    fn filtfilt_preserves_constants() {
        let f = butter2_design(10.0, 100.0).unwrap();
        let y = filtfilt(&f, &[2.75; 64]).unwrap();
        assert!(y.iter().all(|v| (v - 2.75).abs() < 1e-12));
    }

    #[test]
    fn filtfilt_passband_and_stopband() {
        let f = butter2_design(10.0, 100.0).unwrap();
        let n = 2000;
        let x = sine(1.0, 100.0, n);
        let y = filtfilt(&f, &x).unwrap();
        // Compare over the interior away from edge effects.
        let mid = 500..1500;
        let amp = y[mid.clone()].iter().fold(0.0f64, |m, v| m.max(v.abs()));
        assert!(amp >= 0.99, "1 Hz amplitude {amp}");
        let err = mid.clone().map(|i| (y[i] - x[i] * amp).abs()).fold(0.0, f64::max);
        assert!(err < 1e-3, "1 Hz phase/shape error {err}");

        let x = sine(30.0, 100.0, n);
        let y = filtfilt(&f, &x).unwrap();
        let amp = y[mid].iter().fold(0.0f64, |m, v| m.max(v.abs()));
        assert!(amp < 0.05, "30 Hz amplitude {amp}");
    }

    #[test]
    fn filtfilt_rejects_short_series() {
        let f = butter2_design(10.0, 100.0).unwrap();
        assert_eq!(filtfilt(&f, &[1.0; 9]), Err(DspError::SeriesTooShort { len: 9, min: 9 }));
    }
}
