use super::DataError;

/// A multi-channel series sampled on one clock.
#[derive(Debug, Clone, PartialEq)]
pub struct Stream {
    pub rate_hz: f64,
    pub timestamps_s: Vec<f64>,
    /// Channel-major: `channels[c][i]` is channel `c` at `timestamps_s[i]`.
    pub channels: Vec<Vec<f64>>,
}

impl Stream {
    /// A stream with timestamps `start_s + i / rate_hz`.
    pub fn uniform(rate_hz: f64, start_s: f64, channels: Vec<Vec<f64>>) -> Self {
        let n = channels.first().map_or(0, Vec::len);
        let timestamps_s = (0..n).map(|i| start_s + i as f64 / rate_hz).collect();
        Self { rate_hz, timestamps_s, channels }
    }

    pub fn len(&self) -> usize {
        self.timestamps_s.len()
    }

    pub fn is_empty(&self) -> bool {
        self.timestamps_s.is_empty()
    }

    pub fn start_s(&self) -> f64 {
        self.timestamps_s.first().copied().unwrap_or(0.0)
    }

    /// Timestamps strictly increasing, channel lengths consistent.
    pub fn validate(&self) -> Result<(), DataError> {
        if !(self.rate_hz > 0.0 && self.rate_hz.is_finite()) {
            return Err(DataError::Invalid(format!("bad sample rate {}", self.rate_hz)));
        }
        if let Some(c) = self.channels.iter().position(|c| c.len() != self.len()) {
            return Err(DataError::Invalid(format!(
                "channel {c} has {} samples, timestamps {}",
                self.channels[c].len(),
                self.len()
            )));
        }
        if let Some(i) = self.timestamps_s.windows(2).position(|w| !(w[1] > w[0])) {
            return Err(DataError::NonUniformTimestamps { index: i + 1 });
        }
        Ok(())
    }

    fn check_uniform(&self) -> Result<(), DataError> {
        self.validate()?;
        let period = 1.0 / self.rate_hz;
        let t0 = self.start_s();
        for (i, &t) in self.timestamps_s.iter().enumerate() {
            if (t - (t0 + i as f64 * period)).abs() > 1e-3 * period {
                return Err(DataError::NonUniformTimestamps { index: i });
            }
        }
        Ok(())
    }
}

/// Linear interpolation onto a `target_rate_hz` grid anchored at the first
/// timestamp. Grid points that coincide with native samples copy them
/// exactly.
pub fn resample_linear(stream: &Stream, target_rate_hz: f64) -> Result<Stream, DataError> {
    stream.check_uniform()?;
    if !(target_rate_hz > 0.0 && target_rate_hz.is_finite()) {
        return Err(DataError::Invalid(format!("bad target rate {target_rate_hz}")));
    }
    let n_in = stream.len();
    if n_in == 0 {
        return Ok(Stream {
            rate_hz: target_rate_hz,
            timestamps_s: Vec::new(),
            channels: vec![Vec::new(); stream.channels.len()],
        });
    }
    let step = stream.rate_hz / target_rate_hz;
    let n_out = (((n_in - 1) as f64) / step + 1e-9).floor() as usize + 1;
    let positions: Vec<(usize, f64)> = (0..n_out)
        .map(|n| {
            let pos = n as f64 * step;
            let i0 = (pos.floor() as usize).min(n_in - 1);
            (i0, pos - i0 as f64)
        })
        .collect();
    let channels = stream
        .channels
        .iter()
        .map(|v| {
            positions
                .iter()
                .map(|&(i0, f)| if f <= 0.0 || i0 + 1 >= n_in { v[i0] } else { v[i0] * (1.0 - f) + v[i0 + 1] * f })
                .collect()
        })
        .collect();
    Ok(Stream::uniform(target_rate_hz, stream.start_s(), channels))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn same_rate_is_identity() {
        let vals: Vec<f64> = (0..50).map(|i| (i as f64 * 0.31).sin()).collect();
        let s = Stream::uniform(100.0, 2.5, vec![vals.clone()]);
        let r = resample_linear(&s, 100.0).unwrap();
        assert_eq!(r.channels[0], vals);
        assert_eq!(r.len(), 50);
    }

    #[test]
    fn constant_downsampled_stays_constant() {
        let s = Stream::uniform(2000.0, 0.0, vec![vec![712.5; 4001]]);
        let r = resample_linear(&s, 100.0).unwrap();
        assert_eq!(r.len(), 201);
        assert!(r.channels[0].iter().all(|&v| v == 712.5));
    }

    #[test]
    fn ramp_is_reproduced() {
        let ramp: Vec<f64> = (0..=200).map(|i| i as f64 / 200.0).collect();
        let s = Stream::uniform(200.0, 0.0, vec![ramp]);
        let r = resample_linear(&s, 100.0).unwrap();
        assert_eq!(r.len(), 101);
        let max_dev = r.channels[0].iter().enumerate().map(|(n, v)| (v - n as f64 / 100.0).abs()).fold(0.0, f64::max);
        assert!(max_dev < 1e-12);
    }

    #[test]
    fn upsampling_interpolates() {
        let s = Stream::uniform(50.0, 0.0, vec![vec![0.0, 1.0, 3.0]]);
        let r = resample_linear(&s, 100.0).unwrap();
        assert_eq!(r.channels[0], vec![0.0, 0.5, 1.0, 2.0, 3.0]);
    }

    #[test]
    fn jittered_timestamps_are_rejected() {
        let mut s = Stream::uniform(100.0, 0.0, vec![vec![0.0; 10]]);
        s.timestamps_s[4] += 0.004;
        assert_eq!(resample_linear(&s, 100.0), Err(DataError::NonUniformTimestamps { index: 4 }));
        s.timestamps_s[4] = s.timestamps_s[3];
        assert_eq!(s.validate(), Err(DataError::NonUniformTimestamps { index: 4 }));
    }
}
