use serde::{Deserialize, Serialize};

use super::channels::{ChannelLayout, ChannelSignMap, FOOT_SAGITTAL_EULER, FULL_CHANNELS, REDUCED_CHANNELS};
use super::resample::{resample_linear, Stream};
use super::stance::{label_stance, segment_strides};
use super::DataError;
use crate::dsp::{butter2_design, filtfilt};

/// Shared sampling rate of every ingested series.
pub const TRIAL_RATE_HZ: f64 = 100.0;
/// Cutoff of the zero-phase ground-truth torque filter.
pub const TORQUE_CUTOFF_HZ: f64 = 10.0;
/// Anti-alias cutoff applied to vertical GRF before downsampling.
pub const GRF_CUTOFF_HZ: f64 = 40.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Population {
    Healthy,
    PostStroke,
}

impl Population {
    pub fn as_str(self) -> &'static str {
        match self {
            Population::Healthy => "healthy",
            Population::PostStroke => "post-stroke",
        }
    }
}

impl std::str::FromStr for Population {
    type Err = DataError;
    fn from_str(s: &str) -> Result<Self, DataError> {
        match s {
            "healthy" => Ok(Population::Healthy),
            "post-stroke" | "impaired" => Ok(Population::PostStroke),
            other => Err(DataError::Invalid(format!("unknown population '{other}'"))),
        }
    }
}

/// Self-selected slow, comfortable and fast walking speeds.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum SpeedCondition {
    #[serde(rename = "SWS")]
    Sws,
    #[serde(rename = "CWS")]
    Cws,
    #[serde(rename = "FWS")]
    Fws,
}

impl SpeedCondition {
    pub fn as_str(self) -> &'static str {
        match self {
            SpeedCondition::Sws => "SWS",
            SpeedCondition::Cws => "CWS",
            SpeedCondition::Fws => "FWS",
        }
    }
}

impl std::str::FromStr for SpeedCondition {
    type Err = DataError;
    fn from_str(s: &str) -> Result<Self, DataError> {
        match s {
            "SWS" => Ok(SpeedCondition::Sws),
            "CWS" => Ok(SpeedCondition::Cws),
            "FWS" => Ok(SpeedCondition::Fws),
            other => Err(DataError::Invalid(format!("unknown speed condition '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialMeta {
    pub participant_id: String,
    pub trial_id: String,
    pub mass_kg: f64,
    /// Mean belt speed over the trial.
    pub speed_mps: f64,
    pub condition: Option<SpeedCondition>,
    pub population: Population,
}

/// Synchronized sources at their native rates.
#[derive(Debug, Clone, PartialEq)]
pub struct RawTrial {
    pub meta: TrialMeta,
    /// 27 channels in [`FULL_CHANNELS`] order, 100 Hz.
    pub imu: Stream,
    /// Vertical GRF (N), 2000 Hz.
    pub grf: Stream,
    /// Ground-truth ankle torque (Nm/kg, plantarflexion positive), 200 Hz.
    pub torque: Stream,
    /// Exoskeleton encoder ankle angle (deg), 100 Hz. Post-stroke only.
    pub encoder: Option<Stream>,
}

impl RawTrial {
    pub fn validate(&self) -> Result<(), DataError> {
        if !(self.meta.mass_kg > 0.0) {
            return Err(DataError::Invalid(format!("mass must be > 0, got {}", self.meta.mass_kg)));
        }
        if self.imu.channels.len() != FULL_CHANNELS.len() {
            return Err(DataError::Invalid(format!(
                "IMU stream has {} channels, expected {}",
                self.imu.channels.len(),
                FULL_CHANNELS.len()
            )));
        }
        for s in [&self.imu, &self.grf, &self.torque].into_iter().chain(self.encoder.as_ref()) {
            s.validate()?;
        }
        if self.grf.channels.len() != 1 || self.torque.channels.len() != 1 {
            return Err(DataError::Invalid("GRF and torque streams must be single-channel".into()));
        }
        Ok(())
    }
}

/// An ingested trial: every series on one 100 Hz grid.
#[derive(Debug, Clone, PartialEq)]
pub struct GaitTrial {
    pub layout: ChannelLayout,
    /// Channel-major model inputs in `layout` order.
    pub inputs: Vec<Vec<f64>>,
    pub vgrf_n: Vec<f64>,
    /// Filtered ground-truth torque, Nm/kg.
    pub torque: Vec<f64>,
    pub stance: Vec<bool>,
    /// Initial-contact sample indices.
    pub stride_starts: Vec<usize>,
    pub meta: TrialMeta,
}

impl GaitTrial {
    pub fn len(&self) -> usize {
        self.torque.len()
    }

    pub fn is_empty(&self) -> bool {
        self.torque.is_empty()
    }

    pub fn num_channels(&self) -> usize {
        self.inputs.len()
    }

    pub fn validate(&self) -> Result<(), DataError> {
        let n = self.len();
        if self.inputs.len() != self.layout.len() {
            return Err(DataError::Invalid(format!(
                "{} input channels for layout with {}",
                self.inputs.len(),
                self.layout.len()
            )));
        }
        if self.inputs.iter().any(|c| c.len() != n) || self.vgrf_n.len() != n || self.stance.len() != n {
            return Err(DataError::Invalid("trial series have unequal lengths".into()));
        }
        if self.stride_starts.windows(2).any(|w| w[1] <= w[0]) || self.stride_starts.iter().any(|&i| i >= n) {
            return Err(DataError::Invalid("stride boundaries must be strictly increasing and in range".into()));
        }
        if let Some(&b) = self.stride_starts.iter().find(|&&i| !self.stance[i] || (i > 0 && self.stance[i - 1])) {
            return Err(DataError::Invalid(format!("stride boundary {b} is not at a stance onset")));
        }
        Ok(())
    }

    /// Sub-trial over samples `range`. Stride boundaries are re-based, and
    /// a boundary at the new first sample is dropped since its onset can no
    /// longer be seen.
    pub fn slice(&self, range: std::ops::Range<usize>) -> GaitTrial {
        let (a, b) = (range.start, range.end.min(self.len()));
        GaitTrial {
            layout: self.layout,
            inputs: self.inputs.iter().map(|c| c[a..b].to_vec()).collect(),
            vgrf_n: self.vgrf_n[a..b].to_vec(),
            torque: self.torque[a..b].to_vec(),
            stance: self.stance[a..b].to_vec(),
            stride_starts: self.stride_starts.iter().filter(|&&i| i > a && i < b).map(|&i| i - a).collect(),
            meta: self.meta.clone(),
        }
    }

    /// Same trial with every input rounded to single precision, matching
    /// what a sensor frame can carry.
    pub fn to_f32_inputs(&self) -> GaitTrial {
        let mut t = self.clone();
        for c in &mut t.inputs {
            for v in c.iter_mut() {
                *v = *v as f32 as f64;
            }
        }
        t
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct IngestOptions {
    pub layout: Option<ChannelLayout>,
    pub sign_map: ChannelSignMap,
}

/// Resamples every source to 100 Hz, filters ground truth, labels stance
/// and segments strides. Without an explicit layout the reduced 16-channel
/// input is built.
pub fn ingest(raw: &RawTrial, opts: &IngestOptions) -> Result<GaitTrial, DataError> {
    raw.validate()?;
    opts.sign_map.validate()?;
    let imu = resample_linear(&raw.imu, TRIAL_RATE_HZ)?;

    let grf_lp = butter2_design(GRF_CUTOFF_HZ, raw.grf.rate_hz)?;
    let grf_smoothed = Stream {
        rate_hz: raw.grf.rate_hz,
        timestamps_s: raw.grf.timestamps_s.clone(),
        channels: vec![filtfilt(&grf_lp, &raw.grf.channels[0])?],
    };
    let grf = resample_linear(&grf_smoothed, TRIAL_RATE_HZ)?;
    let torque = resample_linear(&raw.torque, TRIAL_RATE_HZ)?;
    let encoder = raw.encoder.as_ref().map(|e| resample_linear(e, TRIAL_RATE_HZ)).transpose()?;

    let n =
        [imu.len(), grf.len(), torque.len()].into_iter().chain(encoder.as_ref().map(Stream::len)).min().unwrap_or(0);

    let imu_ch: Vec<Vec<f64>> =
        imu.channels.iter().zip(&opts.sign_map.0).map(|(c, s)| c[..n].iter().map(|v| v * s).collect()).collect();
    let layout = opts.layout.unwrap_or(ChannelLayout::Reduced16);
    let inputs = match layout {
        ChannelLayout::Full27 => imu_ch,
        ChannelLayout::Reduced16 => {
            let mut v: Vec<Vec<f64>> = REDUCED_CHANNELS[..15]
                .iter()
                .map(|name| imu_ch[ChannelLayout::Full27.index_of(name).expect("known channel")].clone())
                .collect();
            let ankle = match (&encoder, raw.meta.population) {
                (Some(e), Population::PostStroke) => e.channels[0][..n].to_vec(),
                (_, Population::PostStroke) => {
                    return Err(DataError::Invalid("post-stroke trial lacks an encoder stream".into()))
                }
                (_, Population::Healthy) => imu_ch[FOOT_SAGITTAL_EULER].clone(),
            };
            v.push(ankle);
            v
        }
    };

    let vgrf_n = grf.channels[0][..n].to_vec();
    let torque = filter_ground_truth(&torque.channels[0][..n])?;
    let stance = label_stance(&vgrf_n);
    let stride_starts = segment_strides(&stance, TRIAL_RATE_HZ);
    let trial = GaitTrial { layout, inputs, vgrf_n, torque, stance, stride_starts, meta: raw.meta.clone() };
    trial.validate()?;
    Ok(trial)
}

/// Zero-phase 10 Hz low-pass (a 2nd-order Butterworth run forwards and
/// backwards) of 100 Hz ground-truth torque.
pub fn filter_ground_truth(torque: &[f64]) -> Result<Vec<f64>, DataError> {
    let f = butter2_design(TORQUE_CUTOFF_HZ, TRIAL_RATE_HZ)?;
    Ok(filtfilt(&f, torque)?)
}
