//! Synthetic gait generator standing in for recorded treadmill sessions.
//!
//! Each participant walks with a stride period `T(v) = T0 / sqrt(v)`. Within
//! a stride, at gait-cycle phase `phi` in `[0, 1)`:
//!
//! * torque is a dorsiflexion trough (wrapped Gaussian at 5%) plus an
//!   asymmetric plantarflexion peak near 45% that decays by toe-off;
//! * vertical GRF is a double bump on a body-weight fraction during stance
//!   (`phi < stance_fraction`), with short loading and unloading ramps, and
//!   zero in swing;
//! * each segment has phase-locked sagittal, frontal and transverse angles
//!   mixed by a participant-specific near-identity matrix. Gyros are their
//!   exact time derivatives. The foot angle carries a term proportional to
//!   the stride's torque so that torque magnitude is observable;
//! * accelerations are a fixed linear map of the clean gyros plus heavy
//!   noise, so they add no information beyond the gyros.
//!
//! Post-stroke participants get an attenuated plantarflexion peak, a longer
//! stance, a stiffer knee and more stride-to-stride variability. All
//! stochastic per-stride variation scales with `noise`; at `noise = 0`
//! constant-speed trials are exactly periodic.
//!
//! Generation is deterministic in `(spec, seed)`.

use std::f64::consts::{PI, TAU};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::resample::Stream;
use super::trial::{Population, RawTrial, SpeedCondition, TrialMeta};
use super::DataError;
use crate::textcfg::{merge_config_text, ConfigError};

pub const IMU_RATE_HZ: f64 = 100.0;
pub const GRF_RATE_HZ: f64 = 2000.0;
pub const MOCAP_RATE_HZ: f64 = 200.0;
const GRAVITY: f64 = 9.81;

/// What to generate. Text form: JSON or `key=value`, see [`PopulationSpec::parse`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PopulationSpec {
    pub population: Population,
    pub participants: usize,
    pub trials_per_participant: usize,
    pub trial_duration_s: f64,
    /// Multiplier on all sensor noise and per-stride variability.
    pub noise: f64,
    /// Walk every trial at this speed instead of the protocol speeds.
    pub constant_speed_mps: Option<f64>,
    /// Duration of the mid-trial speed ramp (healthy protocol).
    pub ramp_s: f64,
}

impl Default for PopulationSpec {
    fn default() -> Self {
        Self::healthy()
    }
}

impl PopulationSpec {
    /// Six participants, six 4-minute trials with a mid-trial speed change.
    pub fn for_population(p: Population) -> Self {
        match p {
            Population::Healthy => Self::healthy(),
            Population::PostStroke => Self::post_stroke(),
        }
    }

    pub fn healthy() -> Self {
        Self {
            population: Population::Healthy,
            participants: 6,
            trials_per_participant: 6,
            trial_duration_s: 240.0,
            noise: 1.0,
            constant_speed_mps: None,
            ramp_s: 10.0,
        }
    }

    /// Four participants, two 2-minute trials at each of SWS, CWS, FWS.
    pub fn post_stroke() -> Self {
        Self {
            population: Population::PostStroke,
            participants: 4,
            trials_per_participant: 6,
            trial_duration_s: 120.0,
            ..Self::healthy()
        }
    }

    pub fn with_trials(mut self, trials: usize, duration_s: f64) -> Self {
        self.trials_per_participant = trials;
        self.trial_duration_s = duration_s;
        self
    }

    /// Parses a spec from JSON or `key=value` text. Omitted keys take the
    /// defaults of the named population.
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let map = crate::textcfg::parse_config_text(text)?;
        let pop = match map.get("population").and_then(|v| v.as_str()) {
            Some(p) => p
                .parse::<Population>()
                .map_err(|e| ConfigError::Key { key: "population".into(), msg: e.to_string() })?,
            None => Population::Healthy,
        };
        let base = Self::for_population(pop);
        let spec = merge_config_text(&base, text)?;
        spec.validate().map_err(|e| ConfigError::Invalid(e.to_string()))?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<(), DataError> {
        let bad = |m: &str| Err(DataError::Invalid(format!("synthetic spec: {m}")));
        if self.participants == 0 || self.trials_per_participant == 0 {
            return bad("participants and trials_per_participant must be >= 1");
        }
        if !(self.trial_duration_s.is_finite() && self.trial_duration_s >= 2.0) {
            return bad("trial_duration_s must be >= 2");
        }
        if !(self.noise.is_finite() && self.noise >= 0.0) {
            return bad("noise must be finite and >= 0");
        }
        if !(self.ramp_s.is_finite() && self.ramp_s >= 0.0) {
            return bad("ramp_s must be >= 0");
        }
        if let Some(v) = self.constant_speed_mps {
            if !(v.is_finite() && (0.2..=2.5).contains(&v)) {
                return bad("constant_speed_mps must lie in [0.2, 2.5]");
            }
        }
        Ok(())
    }
}

/// Generator-side ground truth that ingestion has to recover.
#[derive(Debug, Clone, PartialEq)]
pub struct SynthTruth {
    /// Stance mask on the 100 Hz grid.
    pub stance: Vec<bool>,
    /// Initial-contact times.
    pub contacts_s: Vec<f64>,
    pub stance_fraction: f64,
    /// Stride period at 1 m/s.
    pub base_period_s: f64,
}

#[derive(Debug, Clone)]
struct Participant {
    id: String,
    mass_kg: f64,
    population: Population,
    base_period_s: f64,
    stance_fraction: f64,
    df_depth: f64,
    pf_peak: f64,
    pf_center: f64,
    knee_gain: f64,
    jitter: f64,
    amp_var: f64,
    cws_mps: f64,
    /// Per segment (foot, shank, thigh): angle mixing matrix.
    mix: [[[f64; 3]; 3]; 3],
    /// Per segment: acceleration map from gyros.
    acc_map: [[[f64; 3]; 3]; 3],
    phase_offsets: [f64; 6],
    start_with_acceleration: bool,
}

/// Signal model of one stride, evaluated at phase `phi`.
#[derive(Debug, Clone, Copy)]
struct StrideShape<'a> {
    p: &'a Participant,
    speed: f64,
    amp: f64,
}

fn gauss(x: f64, mu: f64, sigma: f64) -> f64 {
    let z = (x - mu) / sigma;
    (-0.5 * z * z).exp()
}

/// Gaussian on the unit circle, distance taken the short way around.
fn wrapped_gauss(phi: f64, mu: f64, sigma: f64) -> f64 {
    let mut d = (phi - mu).rem_euclid(1.0);
    if d > 0.5 {
        d -= 1.0;
    }
    gauss(d, 0.0, sigma)
}

impl StrideShape<'_> {
    fn torque(&self, phi: f64) -> f64 {
        let p = self.p;
        let df = -p.df_depth * (0.8 + 0.2 * self.speed) * wrapped_gauss(phi, 0.05, 0.028);
        let peak = p.pf_peak * self.amp * (0.75 + 0.25 * self.speed);
        let mu = p.pf_center;
        let sigma = if phi < mu { 0.11 } else { (p.stance_fraction - mu) / 2.6 };
        df + peak * gauss(phi, mu, sigma)
    }

    fn vgrf(&self, phi: f64) -> f64 {
        let s = self.p.stance_fraction;
        if phi >= s {
            return 0.0;
        }
        let u = phi / s;
        let load = match self.p.population {
            Population::Healthy => 1.0,
            Population::PostStroke => 0.85,
        };
        let bw = self.p.mass_kg * GRAVITY * load;
        // Loading and unloading ramps over the first and last 4% of stance.
        let taper = (u / 0.04).min((1.0 - u) / 0.04).min(1.0);
        taper * bw * (0.3 + 0.45 * (PI * u).sin() + 0.45 * (gauss(u, 0.22, 0.1) + gauss(u, 0.78, 0.1)))
    }

    /// Unmixed (frontal, transverse, sagittal) angles per segment, degrees.
    fn angles(&self, phi: f64) -> [[f64; 3]; 3] {
        let p = self.p;
        let s = p.stance_fraction;
        let w = TAU * phi;
        let o = &p.phase_offsets;
        let v = self.speed;
        let tq = self.torque(phi);
        // Push-off rotates the foot sharply at toe-off.
        let foot_z = -5.0 + 12.0 * v * (w - 0.9).cos()
            - 24.0 * tq
            - 25.0 * gauss(phi, s + 0.06, 0.05)
            - 6.0 * gauss(phi, s, 0.015)
            - 4.0 * wrapped_gauss(phi, 0.02, 0.012);
        let shank_z = 2.0 + 18.0 * v.sqrt() * (w - 0.4).cos() + 6.0 * tq
            - 30.0 * p.knee_gain * gauss(phi, s + 0.12, 0.07)
            + 3.0 * wrapped_gauss(phi, 0.03, 0.015);
        let thigh_z = 5.0 + 22.0 * v.sqrt() * w.cos() + 4.0 * (2.0 * w + 0.5).sin();
        [
            [3.0 * (w + o[0]).sin(), 2.0 * (2.0 * w + o[1]).cos(), foot_z],
            [2.5 * (w + o[2]).sin(), 2.0 * (2.0 * w + o[3]).cos(), shank_z],
            [2.0 * (w + o[4]).sin(), 3.0 * (2.0 * w + o[5]).cos(), thigh_z],
        ]
    }
}

/// Deterministic gait timeline for one trial.
struct Timeline {
    /// (start time, duration, speed at start, amplitude factor) per stride.
    strides: Vec<(f64, f64, f64, f64)>,
}

impl Timeline {
    fn locate(&self, t: f64) -> (usize, f64) {
        let k = self.strides.partition_point(|s| s.0 <= t).saturating_sub(1);
        let (t0, dur, ..) = self.strides[k];
        (k, ((t - t0) / dur).clamp(0.0, 1.0 - 1e-12))
    }
}

fn participant_rng(seed: u64, population: Population, index: usize) -> ChaCha8Rng {
    let pop = match population {
        Population::Healthy => 0x4845_414c_5448u64,
        Population::PostStroke => 0x5354_524f_4b45u64,
    };
    ChaCha8Rng::seed_from_u64(seed ^ pop.rotate_left(17) ^ (index as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15))
}

fn near_identity<R: Rng>(rng: &mut R, scale: f64) -> [[f64; 3]; 3] {
    let n = Normal::new(0.0, scale).expect("scale > 0");
    let mut m = [[0.0; 3]; 3];
    for (i, row) in m.iter_mut().enumerate() {
        for (j, v) in row.iter_mut().enumerate() {
            *v = if i == j { 1.0 } else { 0.0 } + n.sample(rng);
        }
    }
    m
}

fn make_participant(population: Population, index: usize, rng: &mut ChaCha8Rng) -> Participant {
    let impaired = population == Population::PostStroke;
    let prefix = if impaired { "S" } else { "H" };
    let mut acc_map = [[[0.0; 3]; 3]; 3];
    for seg in &mut acc_map {
        for row in seg.iter_mut() {
            for v in row.iter_mut() {
                *v = rng.random_range(-0.03..0.03);
            }
        }
    }
    let mix = [near_identity(rng, 0.05), near_identity(rng, 0.05), near_identity(rng, 0.05)];
    let mut phase_offsets = [0.0; 6];
    for o in &mut phase_offsets {
        *o = rng.random_range(0.0..TAU);
    }
    Participant {
        id: format!("{prefix}{:02}", index + 1),
        mass_kg: rng.random_range(60.0..95.0),
        population,
        base_period_s: rng.random_range(1.0..1.2),
        stance_fraction: if impaired { rng.random_range(0.64..0.72) } else { rng.random_range(0.58..0.65) },
        df_depth: if impaired { rng.random_range(0.08..0.2) } else { rng.random_range(0.12..0.3) },
        pf_peak: rng.random_range(1.3..1.6) * if impaired { rng.random_range(0.5..0.75) } else { 1.0 },
        pf_center: rng.random_range(0.43..0.48),
        knee_gain: if impaired { rng.random_range(0.5..0.75) } else { 1.0 },
        jitter: if impaired { 0.04 } else { 0.01 },
        amp_var: if impaired { 0.08 } else { 0.03 },
        cws_mps: rng.random_range(0.5..0.8),
        mix,
        acc_map,
        phase_offsets,
        start_with_acceleration: index % 2 == 0,
    }
}

fn stride_period(p: &Participant, v: f64) -> f64 {
    p.base_period_s / v.sqrt()
}

/// Speed profile and condition of trial `j`.
fn trial_speed(p: &Participant, spec: &PopulationSpec, j: usize) -> (Box<dyn Fn(f64) -> f64>, Option<SpeedCondition>) {
    if let Some(v) = spec.constant_speed_mps {
        return (Box::new(move |_| v), None);
    }
    match p.population {
        Population::Healthy => {
            let up = [1.2, 1.4];
            let down = [0.8, 0.6];
            let accel = (j % 2 == 0) == p.start_with_acceleration;
            let target = if accel { up[(j / 2) % 2] } else { down[(j / 2) % 2] };
            let half = spec.trial_duration_s / 2.0;
            let ramp = spec.ramp_s.min(half);
            (
                Box::new(move |t: f64| {
                    if t < half {
                        1.0
                    } else if ramp <= 0.0 || t >= half + ramp {
                        target
                    } else {
                        1.0 + (target - 1.0) * (t - half) / ramp
                    }
                }),
                None,
            )
        }
        Population::PostStroke => {
            let cond = [SpeedCondition::Sws, SpeedCondition::Cws, SpeedCondition::Fws][j % 3];
            let v = p.cws_mps
                * match cond {
                    SpeedCondition::Sws => 0.77,
                    SpeedCondition::Cws => 1.0,
                    SpeedCondition::Fws => 1.23,
                };
            (Box::new(move |_| v), Some(cond))
        }
    }
}

fn build_timeline<R: Rng>(
    p: &Participant,
    speed: &dyn Fn(f64) -> f64,
    duration: f64,
    noise: f64,
    rng: &mut R,
) -> Timeline {
    let n = Normal::new(0.0, 1.0).expect("unit normal");
    let mut strides = Vec::new();
    // Start mid-swing so the first contact is observed.
    let mut t = -0.8 * stride_period(p, speed(0.0));
    while t < duration + 1.0 {
        let v = speed(t.max(0.0));
        let dur = stride_period(p, v) * (1.0 + noise * p.jitter * n.sample(rng)).clamp(0.8, 1.2);
        let amp = (1.0 + noise * p.amp_var * n.sample(rng)).clamp(0.7, 1.3);
        strides.push((t, dur, v, amp));
        t += dur;
    }
    Timeline { strides }
}

fn matvec(m: &[[f64; 3]; 3], x: &[f64; 3]) -> [f64; 3] {
    [0, 1, 2].map(|i| m[i][0] * x[0] + m[i][1] * x[1] + m[i][2] * x[2])
}

/// Generates every trial of every participant in `spec`.
pub fn synth_generate(spec: &PopulationSpec, seed: u64) -> Result<Vec<RawTrial>, DataError> {
    Ok(synth_generate_with_truth(spec, seed)?.into_iter().map(|(r, _)| r).collect())
}

pub fn synth_generate_with_truth(spec: &PopulationSpec, seed: u64) -> Result<Vec<(RawTrial, SynthTruth)>, DataError> {
    spec.validate()?;
    let mut out = Vec::with_capacity(spec.participants * spec.trials_per_participant);
    for i in 0..spec.participants {
        let mut rng = participant_rng(seed, spec.population, i);
        let p = make_participant(spec.population, i, &mut rng);
        for j in 0..spec.trials_per_participant {
            out.push(generate_trial(&p, spec, j, &mut rng));
        }
    }
    Ok(out)
}

fn generate_trial<R: Rng>(p: &Participant, spec: &PopulationSpec, j: usize, rng: &mut R) -> (RawTrial, SynthTruth) {
    let duration = spec.trial_duration_s;
    let noise = spec.noise;
    let (speed, condition) = trial_speed(p, spec, j);
    let timeline = build_timeline(p, speed.as_ref(), duration, noise, rng);
    let shape_at = |t: f64| {
        let (k, phi) = timeline.locate(t);
        let (_, _, v, amp) = timeline.strides[k];
        (StrideShape { p, speed: v, amp }, phi)
    };
    let stride_rate = |t: f64| 1.0 / timeline.strides[timeline.locate(t).0].1;
    let std_n = Normal::new(0.0, 1.0).expect("unit normal");
    let mut gn = |sigma: f64| if noise > 0.0 { noise * sigma * std_n.sample(rng) } else { 0.0 };

    let n_imu = (duration * IMU_RATE_HZ).round() as usize;
    let mut imu: Vec<Vec<f64>> = (0..27).map(|_| Vec::with_capacity(n_imu)).collect();
    let mut encoder = Vec::with_capacity(n_imu);
    let mut stance = Vec::with_capacity(n_imu);
    let mut offsets = [[0.0; 3]; 3];
    for seg in &mut offsets {
        for v in seg.iter_mut() {
            *v = gn(1.0);
        }
    }
    let acc_bias = [0.0, GRAVITY, 0.0];
    for i in 0..n_imu {
        let t = i as f64 / IMU_RATE_HZ;
        let (shape, phi) = shape_at(t);
        stance.push(phi < p.stance_fraction);
        let ang = shape.angles(phi);
        // d(angle)/dt = d(angle)/dphi * dphi/dt, derivative by central
        // difference in phase within the current stride.
        let dphi = 1e-5;
        let a_lo = shape.angles((phi - dphi).max(0.0));
        let a_hi = shape.angles((phi + dphi).min(1.0 - 1e-12));
        let span = (phi + dphi).min(1.0 - 1e-12) - (phi - dphi).max(0.0);
        let rate = stride_rate(t);
        for seg in 0..3 {
            let euler = matvec(&p.mix[seg], &ang[seg]);
            let d: [f64; 3] = [0, 1, 2].map(|a| (a_hi[seg][a] - a_lo[seg][a]) / span * rate);
            let gyro = matvec(&p.mix[seg], &d);
            let acc = matvec(&p.acc_map[seg], &gyro);
            let base = seg * 9;
            for a in 0..3 {
                imu[base + a].push(euler[a] + offsets[seg][a] + gn(0.5));
                imu[base + 3 + a].push(acc[a] + acc_bias[a] + gn(2.0));
                imu[base + 6 + a].push(gyro[a] + gn(3.0));
            }
        }
        if p.population == Population::PostStroke {
            encoder.push(ang[0][2] - ang[1][2] + gn(0.2));
        }
    }

    let n_grf = (duration * GRF_RATE_HZ).round() as usize;
    let grf: Vec<f64> = (0..n_grf)
        .map(|i| {
            let (shape, phi) = shape_at(i as f64 / GRF_RATE_HZ);
            shape.vgrf(phi) + gn(4.0)
        })
        .collect();
    let n_tq = (duration * MOCAP_RATE_HZ).round() as usize;
    let torque: Vec<f64> = (0..n_tq)
        .map(|i| {
            let (shape, phi) = shape_at(i as f64 / MOCAP_RATE_HZ);
            shape.torque(phi)
        })
        .collect();

    let mean_speed = (0..n_imu).map(|i| speed(i as f64 / IMU_RATE_HZ)).sum::<f64>() / n_imu as f64;
    let meta = TrialMeta {
        participant_id: p.id.clone(),
        trial_id: format!("{}_T{:02}", p.id, j + 1),
        mass_kg: p.mass_kg,
        speed_mps: mean_speed,
        condition,
        population: p.population,
    };
    let raw = RawTrial {
        meta,
        imu: Stream::uniform(IMU_RATE_HZ, 0.0, imu),
        grf: Stream::uniform(GRF_RATE_HZ, 0.0, vec![grf]),
        torque: Stream::uniform(MOCAP_RATE_HZ, 0.0, vec![torque]),
        encoder: (p.population == Population::PostStroke).then(|| Stream::uniform(IMU_RATE_HZ, 0.0, vec![encoder])),
    };
    let truth = SynthTruth {
        stance,
        contacts_s: timeline.strides.iter().map(|s| s.0).filter(|&t| t > 0.0 && t < duration).collect(),
        stance_fraction: p.stance_fraction,
        base_period_s: p.base_period_s,
    };
    (raw, truth)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{ingest, IngestOptions};

    fn small(pop: Population) -> PopulationSpec {
        let base = match pop {
            Population::Healthy => PopulationSpec::healthy(),
            Population::PostStroke => PopulationSpec::post_stroke(),
        };
        PopulationSpec { participants: 2, ..base.with_trials(2, 20.0) }
    }

    #[test]
    fn deterministic_per_seed() {
        let a = synth_generate(&small(Population::Healthy), 7).unwrap();
        let b = synth_generate(&small(Population::Healthy), 7).unwrap();
        let c = synth_generate(&small(Population::Healthy), 8).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, c);
        assert_eq!(a.len(), 4);
    }

    #[test]
    fn zero_noise_constant_speed_is_periodic() {
        let spec = PopulationSpec {
            participants: 1,
            noise: 0.0,
            constant_speed_mps: Some(1.0),
            ..PopulationSpec::healthy().with_trials(1, 12.0)
        };
        let mut rng = participant_rng(3, Population::Healthy, 0);
        let p = make_participant(Population::Healthy, 0, &mut rng);
        let period = stride_period(&p, 1.0);
        assert_eq!(period, p.base_period_s);
        let (speed, _) = trial_speed(&p, &spec, 0);
        let tl = build_timeline(&p, speed.as_ref(), spec.trial_duration_s, 0.0, &mut rng);
        let torque_at = |t: f64| {
            let (k, phi) = tl.locate(t);
            let (_, _, v, amp) = tl.strides[k];
            StrideShape { p: &p, speed: v, amp }.torque(phi)
        };
        for i in 0..1000 {
            let t = i as f64 * 0.0097;
            assert!((torque_at(t) - torque_at(t + period)).abs() < 1e-9);
        }
        let (_, truth) = synth_generate_with_truth(&spec, 3).unwrap().remove(0);
        for w in truth.contacts_s.windows(2) {
            assert!((w[1] - w[0] - period).abs() < 1e-9);
        }
    }

    #[test]
    fn stance_fraction_within_contract() {
        for pop in [Population::Healthy, Population::PostStroke] {
            for (_, truth) in synth_generate_with_truth(&small(pop), 11).unwrap() {
                let s = truth.stance_fraction;
                match pop {
                    Population::Healthy => assert!((0.55..=0.70).contains(&s)),
                    Population::PostStroke => assert!((0.60..=0.80).contains(&s)),
                }
            }
        }
    }

    #[test]
    fn labeler_recovers_generator_stance() {
        for pop in [Population::Healthy, Population::PostStroke] {
            for (raw, truth) in synth_generate_with_truth(&small(pop), 5).unwrap() {
                let trial = ingest(&raw, &IngestOptions::default()).unwrap();
                let agree = trial.stance.iter().zip(&truth.stance).filter(|(a, b)| a == b).count();
                let frac = agree as f64 / trial.len() as f64;
                assert!(frac >= 0.99, "{pop:?} agreement {frac}");
            }
        }
    }

    #[test]
    fn zero_noise_torque_matches_template_grid() {
        let spec = PopulationSpec {
            participants: 1,
            noise: 0.0,
            constant_speed_mps: Some(1.0),
            ..PopulationSpec::healthy().with_trials(1, 6.0)
        };
        let (raw, truth) = synth_generate_with_truth(&spec, 1).unwrap().remove(0);
        let samples_per_period = truth.base_period_s * MOCAP_RATE_HZ;
        let tq = &raw.torque.channels[0];
        // Trough is negative and the peak positive in every stride.
        let c0 = (truth.contacts_s[0] * MOCAP_RATE_HZ).ceil() as usize;
        let stride = &tq[c0..c0 + samples_per_period as usize];
        assert!(stride.iter().cloned().fold(f64::INFINITY, f64::min) < 0.0);
        assert!(stride.iter().cloned().fold(f64::NEG_INFINITY, f64::max) > 0.5);
    }

    #[test]
    fn spec_text_parses() {
        let s = PopulationSpec::parse("population=post-stroke\nparticipants=3\ntrial_duration_s=30").unwrap();
        assert_eq!(s.population, Population::PostStroke);
        assert_eq!(s.participants, 3);
        assert_eq!(s.trials_per_participant, 6);
        let j = PopulationSpec::parse(r#"{"participants": 2, "noise": 0.5}"#).unwrap();
        assert_eq!(j.population, Population::Healthy);
        assert_eq!(j.noise, 0.5);
        assert!(PopulationSpec::parse("participants=0").is_err());
        assert!(PopulationSpec::parse("wat=1").is_err());
    }

    #[test]
    fn post_stroke_has_encoder_and_conditions() {
        let trials = synth_generate(&small(Population::PostStroke), 2).unwrap();
        assert!(trials.iter().all(|t| t.encoder.is_some()));
        assert_eq!(trials[0].meta.condition, Some(SpeedCondition::Sws));
        assert_eq!(trials[1].meta.condition, Some(SpeedCondition::Cws));
    }
}
