//! Run parameters merged from an optional TOML file and the command line.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::Args;
use serde::Deserialize;
use switched_imu::{Model, Vec3};

#[derive(Args, Clone, Debug, Default, Deserialize, PartialEq)]
#[serde(deny_unknown_fields, rename_all = "kebab-case")]
pub struct RunConfig {
    /// Integration model
    #[arg(long)]
    pub model: Option<Model>,
    /// IMU log (EuRoC layout, ns stamps)
    #[arg(long)]
    pub imu: Option<PathBuf>,
    /// Ground truth, EuRoC ground-truth or trajectory layout
    #[arg(long)]
    pub truth: Option<PathBuf>,
    /// Estimated trajectory to evaluate
    #[arg(long)]
    pub estimate: Option<PathBuf>,
    /// Scenario description (TOML)
    #[arg(long)]
    pub scenario: Option<PathBuf>,
    /// IMU rate override for the scenario, Hz
    #[arg(long)]
    pub rate_hz: Option<f64>,
    /// Keyframe rate, Hz [default: 10]
    #[arg(long)]
    pub keyframe_hz: Option<f64>,
    /// Vertical gravity component, m/s² [default: -9.81]
    #[arg(long, allow_negative_numbers = true)]
    pub gravity: Option<f64>,
    /// Noise seed [default: 0]
    #[arg(long)]
    pub seed: Option<u64>,
    /// Reinitialize from ground truth every this many seconds
    #[arg(long)]
    pub reset_every: Option<f64>,
    /// Output directory
    #[arg(long)]
    pub out: Option<PathBuf>,
}

impl RunConfig {
    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading config {}", path.display()))?;
        toml::from_str(&text).with_context(|| format!("parsing config {}", path.display()))
    }

    /// Fields set in `self` win over `base`.
    pub fn over(self, base: RunConfig) -> RunConfig {
        RunConfig {
            model: self.model.or(base.model),
            imu: self.imu.or(base.imu),
            truth: self.truth.or(base.truth),
            estimate: self.estimate.or(base.estimate),
            scenario: self.scenario.or(base.scenario),
            rate_hz: self.rate_hz.or(base.rate_hz),
            keyframe_hz: self.keyframe_hz.or(base.keyframe_hz),
            gravity: self.gravity.or(base.gravity),
            seed: self.seed.or(base.seed),
            reset_every: self.reset_every.or(base.reset_every),
            out: self.out.or(base.out),
        }
    }

    pub fn validate(&self) -> Result<()> {
        for (name, value) in [
            ("rate-hz", self.rate_hz),
            ("keyframe-hz", self.keyframe_hz),
            ("reset-every", self.reset_every),
        ] {
            if let Some(v) = value {
                if !(v.is_finite() && v > 0.0) {
                    bail!("invalid {name}: must be a positive number, got {v}");
                }
            }
        }
        if let Some(g) = self.gravity {
            if !g.is_finite() {
                bail!("invalid gravity: must be finite, got {g}");
            }
        }
        Ok(())
    }

    pub fn require<'a, T>(value: &'a Option<T>, name: &str) -> Result<&'a T> {
        value.as_ref().with_context(|| format!("missing required {name}"))
    }

    pub fn gravity_vec(&self) -> Vec3 {
        Vec3::new(0.0, 0.0, self.gravity.unwrap_or(switched_imu::GRAVITY.z))
    }

    pub fn keyframe_hz(&self) -> f64 {
        self.keyframe_hz.unwrap_or(10.0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn flags_win_over_file() {
        let file: RunConfig = toml::from_str("model = \"classical\"\nkeyframe-hz = 5.0\nseed = 3").unwrap();
        let flags = RunConfig {
            model: Some(Model::Proposed),
            ..Default::default()
        };
        let merged = flags.over(file);
        assert_eq!(merged.model, Some(Model::Proposed));
        assert_eq!(merged.keyframe_hz, Some(5.0));
        assert_eq!(merged.seed, Some(3));
    }

    #[test]
    fn unknown_keys_rejected() {
        let err = toml::from_str::<RunConfig>("imu-rate = 100.0").unwrap_err();
        assert!(err.to_string().contains("imu-rate"));
    }

    #[test]
    fn bad_values_named() {
        let cfg = RunConfig {
            rate_hz: Some(-5.0),
            ..Default::default()
        };
        assert!(cfg.validate().unwrap_err().to_string().contains("rate-hz"));
    }
}
