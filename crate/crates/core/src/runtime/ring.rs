/// Fixed-capacity multichannel history. Each sample is written twice, at
/// `pos` and `pos + capacity`, so the latest `capacity` samples of a
/// channel are always one contiguous slice.
#[derive(Debug, Clone)]
pub struct RingBuffer {
    channels: usize,
    capacity: usize,
    data: Vec<f64>,
    pos: usize,
    count: usize,
}

impl RingBuffer {
    pub fn new(channels: usize, capacity: usize) -> Self {
        assert!(capacity >= 1 && channels >= 1, "empty ring buffer");
        Self { channels, capacity, data: vec![0.0; channels * 2 * capacity], pos: 0, count: 0 }
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    /// Samples pushed since the last reset, saturating at capacity.
    pub fn len(&self) -> usize {
        self.count
    }

    pub fn is_empty(&self) -> bool {
        self.count == 0
    }

    pub fn is_ready(&self) -> bool {
        self.count >= self.capacity
    }

    /// Appends one sample per channel and reports whether a full window is
    /// available.
    pub fn push(&mut self, sample: &[f64]) -> bool {
        assert_eq!(sample.len(), self.channels, "sample width");
        let stride = 2 * self.capacity;
        for (c, &v) in sample.iter().enumerate() {
            let base = c * stride;
            self.data[base + self.pos] = v;
            self.data[base + self.pos + self.capacity] = v;
        }
        self.pos = (self.pos + 1) % self.capacity;
        self.count = (self.count + 1).min(self.capacity);
        self.is_ready()
    }

    /// Latest `capacity` samples of channel `c`, oldest first. Only
    /// meaningful once ready.
    pub fn channel(&self, c: usize) -> &[f64] {
        let base = c * 2 * self.capacity + self.pos;
        &self.data[base..base + self.capacity]
    }

    pub fn reset(&mut self) {
        self.pos = 0;
        self.count = 0;
        self.data.iter_mut().for_each(|v| *v = 0.0);
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn readiness_and_order() {
        let mut r = RingBuffer::new(2, 57);
        for i in 1..=56 {
            assert!(!r.push(&[i as f64, -(i as f64)]));
        }
        assert!(r.push(&[57.0, -57.0]));
        let expect: Vec<f64> = (1..=57).map(|i| i as f64).collect();
        assert_eq!(r.channel(0), &expect[..]);
        assert!(r.push(&[58.0, -58.0]));
        let expect: Vec<f64> = (2..=58).map(|i| i as f64).collect();
        assert_eq!(r.channel(0), &expect[..]);
        let neg: Vec<f64> = expect.iter().map(|v| -v).collect();
        assert_eq!(r.channel(1), &neg[..]);
    }

    #[test]
    fn long_run_matches_naive_history() {
        let mut r = RingBuffer::new(1, 5);
        let mut hist = Vec::new();
        for i in 0..1000 {
            hist.push(i as f64 * 0.5);
            r.push(&[i as f64 * 0.5]);
            if hist.len() >= 5 {
                assert_eq!(r.channel(0), &hist[hist.len() - 5..]);
            }
        }
    }

    #[test]
    fn reset_clears() {
        let mut r = RingBuffer::new(1, 3);
        for i in 0..5 {
            r.push(&[i as f64]);
        }
        r.reset();
        assert!(!r.is_ready() && r.is_empty());
        r.push(&[9.0]);
        r.push(&[8.0]);
        assert!(r.push(&[7.0]));
        assert_eq!(r.channel(0), &[9.0, 8.0, 7.0]);
    }
}
