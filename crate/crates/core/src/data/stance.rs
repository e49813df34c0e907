//! Stance labelling from vertical ground reaction force and stride
//! segmentation at initial contacts.

/// Contact threshold on vertical GRF.
pub const STANCE_ON_N: f64 = 20.0;
/// Release happens below `STANCE_ON_N - STANCE_HYSTERESIS_N`.
pub const STANCE_HYSTERESIS_N: f64 = 5.0;
pub const MIN_STRIDE_S: f64 = 0.4;
pub const MAX_STRIDE_S: f64 = 3.0;

/// `true` while the foot is loaded. Negative readings are clamped to zero.
pub fn label_stance(vgrf_n: &[f64]) -> Vec<bool> {
    let off = STANCE_ON_N - STANCE_HYSTERESIS_N;
    let mut stance = false;
    vgrf_n
        .iter()
        .map(|&f| {
            let f = f.max(0.0);
            stance = if stance { f >= off } else { f > STANCE_ON_N };
            stance
        })
        .collect()
}

/// Initial-contact indices (swing to stance transitions).
///
/// A contact closer than [`MIN_STRIDE_S`] to the previous kept contact is
/// treated as a force artifact and dropped. Contacts after a gap longer
/// than [`MAX_STRIDE_S`] are kept as the start of a new stride; use
/// [`complete_strides`] to obtain only valid stride intervals.
pub fn segment_strides(stance: &[bool], rate_hz: f64) -> Vec<usize> {
    let min_len = (MIN_STRIDE_S * rate_hz).round() as usize;
    let mut out: Vec<usize> = Vec::new();
    for i in 1..stance.len() {
        if stance[i] && !stance[i - 1] {
            match out.last() {
                Some(&prev) if i - prev < min_len => {}
                _ => out.push(i),
            }
        }
    }
    out
}

/// Consecutive contact pairs `(start, end)` whose duration lies within
/// `[MIN_STRIDE_S, MAX_STRIDE_S]`.
pub fn complete_strides(boundaries: &[usize], rate_hz: f64) -> Vec<(usize, usize)> {
    let min_len = (MIN_STRIDE_S * rate_hz).round() as usize;
    let max_len = (MAX_STRIDE_S * rate_hz).round() as usize;
    boundaries.windows(2).map(|w| (w[0], w[1])).filter(|(a, b)| (min_len..=max_len).contains(&(b - a))).collect()
}
