//! Channel naming and ordering.
//!
//! Raw IMU streams carry 27 channels: for each of foot, shank and thigh
//! (in that order) the Euler angles (deg), accelerations (m/s^2) and
//! angular velocities (deg/s), each as x/y/z. The `z` axis is the
//! sagittal-plane rotation axis.
//!
//! The reduced 16-channel model input keeps thigh and shank angles and
//! angular velocities, the foot angular velocities, and one ankle-angle
//! channel: the exoskeleton encoder for post-stroke trials, or the foot
//! sagittal Euler angle as a proxy for healthy trials.

use serde::{Deserialize, Serialize};

use super::DataError;

pub const FULL_CHANNELS: [&str; 27] = [
    "foot_euler_x",
    "foot_euler_y",
    "foot_euler_z",
    "foot_acc_x",
    "foot_acc_y",
    "foot_acc_z",
    "foot_gyro_x",
    "foot_gyro_y",
    "foot_gyro_z",
    "shank_euler_x",
    "shank_euler_y",
    "shank_euler_z",
    "shank_acc_x",
    "shank_acc_y",
    "shank_acc_z",
    "shank_gyro_x",
    "shank_gyro_y",
    "shank_gyro_z",
    "thigh_euler_x",
    "thigh_euler_y",
    "thigh_euler_z",
    "thigh_acc_x",
    "thigh_acc_y",
    "thigh_acc_z",
    "thigh_gyro_x",
    "thigh_gyro_y",
    "thigh_gyro_z",
];

pub const REDUCED_CHANNELS: [&str; 16] = [
    "thigh_euler_x",
    "thigh_euler_y",
    "thigh_euler_z",
    "thigh_gyro_x",
    "thigh_gyro_y",
    "thigh_gyro_z",
    "shank_euler_x",
    "shank_euler_y",
    "shank_euler_z",
    "shank_gyro_x",
    "shank_gyro_y",
    "shank_gyro_z",
    "foot_gyro_x",
    "foot_gyro_y",
    "foot_gyro_z",
    "ankle_angle",
];

/// Index of `foot_euler_z` in [`FULL_CHANNELS`].
pub const FOOT_SAGITTAL_EULER: usize = 2;

/// Column order of a trial's input matrix.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ChannelLayout {
    /// All 27 raw IMU channels.
    Full27,
    /// The 16 streamed channels.
    Reduced16,
}

impl ChannelLayout {
    pub fn names(self) -> &'static [&'static str] {
        match self {
            ChannelLayout::Full27 => &FULL_CHANNELS,
            ChannelLayout::Reduced16 => &REDUCED_CHANNELS,
        }
    }

    pub fn len(self) -> usize {
        self.names().len()
    }

    pub fn is_empty(self) -> bool {
        false
    }

    /// Indices of the channels in `group`.
    pub fn group_indices(self, group: ChannelGroup) -> Vec<usize> {
        let tag = group.tag();
        self.names().iter().enumerate().filter(|(_, n)| n.contains(tag)).map(|(i, _)| i).collect()
    }

    pub fn index_of(self, name: &str) -> Option<usize> {
        self.names().iter().position(|n| *n == name)
    }
}

/// Sensor modality groups used by the feature-importance analysis.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ChannelGroup {
    Angles,
    Accelerations,
    Gyros,
}

impl ChannelGroup {
    pub const ALL: [ChannelGroup; 3] = [ChannelGroup::Angles, ChannelGroup::Accelerations, ChannelGroup::Gyros];

    fn tag(self) -> &'static str {
        match self {
            ChannelGroup::Angles => "_euler_",
            ChannelGroup::Accelerations => "_acc_",
            ChannelGroup::Gyros => "_gyro_",
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            ChannelGroup::Angles => "angles",
            ChannelGroup::Accelerations => "accelerations",
            ChannelGroup::Gyros => "gyros",
        }
    }
}

impl std::str::FromStr for ChannelGroup {
    type Err = DataError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "angles" => Ok(ChannelGroup::Angles),
            "accelerations" => Ok(ChannelGroup::Accelerations),
            "gyros" => Ok(ChannelGroup::Gyros),
            other => Err(DataError::Invalid(format!(
                "unknown channel group '{other}' (expected angles, accelerations or gyros)"
            ))),
        }
    }
}

/// Per-channel sign (or gain) applied to raw 27-channel IMU data at
/// ingestion. Healthy recordings whose sensor frames differ from the
/// post-stroke setup are aligned with it; the synthetic generator already
/// emits aligned frames and uses the identity.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChannelSignMap(pub Vec<f64>);

impl ChannelSignMap {
    pub fn identity() -> Self {
        Self(vec![1.0; FULL_CHANNELS.len()])
    }

    pub fn validate(&self) -> Result<(), DataError> {
        if self.0.len() != FULL_CHANNELS.len() || self.0.iter().any(|v| !v.is_finite()) {
            return Err(DataError::Invalid(format!(
                "sign map needs {} finite entries, got {}",
                FULL_CHANNELS.len(),
                self.0.len()
            )));
        }
        Ok(())
    }
}

impl Default for ChannelSignMap {
    fn default() -> Self {
        Self::identity()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::HashSet;

    #[test]
    fn names_unique_and_sized() {
        for layout in [ChannelLayout::Full27, ChannelLayout::Reduced16] {
            let set: HashSet<_> = layout.names().iter().collect();
            assert_eq!(set.len(), layout.len());
        }
        assert_eq!(ChannelLayout::Reduced16.len(), 16);
        assert_eq!(FULL_CHANNELS[FOOT_SAGITTAL_EULER], "foot_euler_z");
    }

    #[test]
    fn groups_partition_full_layout() {
        let mut all: Vec<usize> =
            ChannelGroup::ALL.iter().flat_map(|g| ChannelLayout::Full27.group_indices(*g)).collect();
        all.sort_unstable();
        assert_eq!(all, (0..27).collect::<Vec<_>>());
        assert!(ChannelLayout::Reduced16.group_indices(ChannelGroup::Accelerations).is_empty());
    }

    #[test]
    fn reduced_channels_exist_in_full_layout() {
        for name in &REDUCED_CHANNELS[..15] {
            assert!(ChannelLayout::Full27.index_of(name).is_some(), "{name}");
        }
    }

    #[test]
    fn unknown_group_is_rejected() {
        assert!("magnetometer".parse::<ChannelGroup>().is_err());
        assert_eq!("gyros".parse::<ChannelGroup>().unwrap(), ChannelGroup::Gyros);
    }
}
