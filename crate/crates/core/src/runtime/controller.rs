use serde::{Deserialize, Serialize};

use super::frame::CommandFlags;
use super::RuntimeError;

/// What happens after a fault once fresh input is available again.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FaultRecovery {
    /// Resume once the window has refilled, restarting the ramp-in.
    Auto,
    /// Command 0 Nm for the rest of the session.
    Latch,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ControllerConfig {
    /// Participant mass, kg.
    pub mass_kg: f64,
    /// Proportional gain as a fraction of body mass.
    pub gain_fraction: f64,
    /// Command limit, Nm (applied symmetrically).
    pub saturation_nm: f64,
    /// Linear gain ramp after the window first fills, s.
    pub ramp_in_s: f64,
    /// Timestamp gap that triggers a fault hold, ms.
    pub gap_timeout_ms: f64,
    /// Estimate low-pass cutoff, Hz.
    pub filter_cutoff_hz: f64,
    /// Frame rate, Hz.
    pub sample_hz: f64,
    pub fault_recovery: FaultRecovery,
}

impl Default for ControllerConfig {
    fn default() -> Self {
        Self {
            mass_kg: 70.0,
            gain_fraction: 0.20,
            saturation_nm: 30.0,
            ramp_in_s: 1.0,
            gap_timeout_ms: 100.0,
            filter_cutoff_hz: 7.0,
            sample_hz: 100.0,
            fault_recovery: FaultRecovery::Auto,
        }
    }
}

impl ControllerConfig {
    pub fn validate(&self) -> Result<(), RuntimeError> {
        let bad = |m: String| Err(RuntimeError::InvalidConfig(m));
        if !(0.0..=1.0).contains(&self.gain_fraction) {
            return bad(format!("gain_fraction must lie in [0, 1], got {}", self.gain_fraction));
        }
        if !(self.saturation_nm > 0.0 && self.saturation_nm.is_finite()) {
            return bad(format!("saturation_nm must be positive, got {}", self.saturation_nm));
        }
        if !(self.mass_kg > 0.0 && self.mass_kg.is_finite()) {
            return bad(format!("mass_kg must be positive, got {}", self.mass_kg));
        }
        if !(self.ramp_in_s >= 0.0 && self.ramp_in_s.is_finite()) {
            return bad(format!("ramp_in_s must be >= 0, got {}", self.ramp_in_s));
        }
        if !(self.gap_timeout_ms > 0.0) {
            return bad(format!("gap_timeout_ms must be positive, got {}", self.gap_timeout_ms));
        }
        if !(self.sample_hz > 0.0 && self.filter_cutoff_hz > 0.0 && self.filter_cutoff_hz < self.sample_hz / 2.0) {
            return bad(format!(
                "filter_cutoff_hz must lie in (0, sample_hz / 2), got {} at {} Hz",
                self.filter_cutoff_hz, self.sample_hz
            ));
        }
        Ok(())
    }

    /// Frames needed to ramp the gain from 0 to 1.
    pub fn ramp_frames(&self) -> u64 {
        (self.ramp_in_s * self.sample_hz).round() as u64
    }

    /// Ramp factor for the `n`-th estimate since the window (re)filled,
    /// counting from 1.
    pub fn ramp_factor(&self, n: u64) -> f64 {
        let frames = self.ramp_frames();
        if frames == 0 {
            1.0
        } else {
            (n as f64 / frames as f64).min(1.0)
        }
    }
}

/// Filtered Nm/kg estimate to commanded Nm. A fault commands 0 Nm.
pub fn control_command(filtered_nmkg: f64, cfg: &ControllerConfig, ramp: f64, fault: bool) -> (f64, CommandFlags) {
    let mut flags = CommandFlags::default();
    if fault || !filtered_nmkg.is_finite() {
        flags.set(CommandFlags::FAULT, true);
        return (0.0, flags);
    }
    let torque = filtered_nmkg * cfg.gain_fraction * cfg.mass_kg * ramp.clamp(0.0, 1.0);
    let limit = cfg.saturation_nm;
    if torque.abs() > limit {
        flags.set(CommandFlags::SATURATED, true);
    }
    (torque.clamp(-limit, limit), flags)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg80() -> ControllerConfig {
        ControllerConfig { mass_kg: 80.0, ..ControllerConfig::default() }
    }

    #[test]
    fn proportional_gain() {
        let (t, f) = control_command(0.5, &cfg80(), 1.0, false);
        assert!((t - 8.0).abs() < 1e-12);
        assert_eq!(f, CommandFlags::default());
    }

    #[test]
    fn saturation() {
        let (t, f) = control_command(3.0, &cfg80(), 1.0, false);
        assert_eq!(t, 30.0);
        assert!(f.saturated());
        let (t, _) = control_command(-3.0, &cfg80(), 1.0, false);
        assert_eq!(t, -30.0);
    }

    #[test]
    fn ramp_halves() {
        let cfg = cfg80();
        let half = cfg.ramp_frames() / 2;
        assert_eq!(cfg.ramp_factor(half), 0.5);
        let (t, _) = control_command(0.5, &cfg, cfg.ramp_factor(half), false);
        assert!((t - 4.0).abs() < 1e-12);
        assert_eq!(cfg.ramp_factor(10_000), 1.0);
        let instant = ControllerConfig { ramp_in_s: 0.0, ..cfg };
        assert_eq!(instant.ramp_factor(1), 1.0);
    }

    #[test]
    fn fault_commands_zero() {
        let (t, f) = control_command(0.5, &cfg80(), 1.0, true);
        assert_eq!(t, 0.0);
        assert!(f.fault());
        let (t, f) = control_command(f64::NAN, &cfg80(), 1.0, false);
        assert_eq!(t, 0.0);
        assert!(f.fault());
    }

    #[test]
    fn validation() {
        assert!(ControllerConfig::default().validate().is_ok());
        for bad in [
            ControllerConfig { gain_fraction: 1.5, ..Default::default() },
            ControllerConfig { gain_fraction: -0.1, ..Default::default() },
            ControllerConfig { saturation_nm: 0.0, ..Default::default() },
            ControllerConfig { mass_kg: -1.0, ..Default::default() },
            ControllerConfig { filter_cutoff_hz: 60.0, ..Default::default() },
        ] {
            assert!(bad.validate().is_err(), "{bad:?}");
        }
    }
}
