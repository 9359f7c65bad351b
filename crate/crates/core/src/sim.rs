//! Synthetic scenarios with piecewise-constant body-frame inputs.
//!
//! Under such inputs the proposed discrete model is the exact solution of
//! the kinematics, so [`generate`] uses it at the IMU rate to produce truth
//! and [`fine_oracle`] re-derives the same truth with sub-stepping.

use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::Deserialize;

use crate::error::{Error, Result};
use crate::io::Trajectory;
use crate::preint::{integrate, step_proposed, ImuSample, Model, NavState, Renormalizer, GRAVITY};
use crate::so3::{mat_e, RotationMatrix, Vec3};
use crate::time::Timestamp;

/// Inputs held for `duration` seconds.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SegmentSpec {
    pub duration: f64,
    /// Body-frame specific force, m/s². Gravity is not added.
    pub a_body: Vec3,
    pub w_body: Vec3,
}

#[derive(Clone, Copy, Debug, PartialEq, Default)]
pub struct NoiseSpec {
    /// Gyroscope white-noise standard deviation, rad/s.
    pub gyro: f64,
    /// Accelerometer white-noise standard deviation, m/s².
    pub accel: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ScenarioSpec {
    pub initial: NavState,
    pub segments: Vec<SegmentSpec>,
    pub imu_rate: f64,
    pub gravity: Vec3,
    pub noise: Option<NoiseSpec>,
}

/// Tolerance on `duration · rate` being an integer, in seconds.
const COMMENSURATE_TOL: f64 = 1e-9;

fn invalid(field: impl Into<String>, reason: impl Into<String>) -> Error {
    Error::Scenario {
        field: field.into(),
        reason: reason.into(),
    }
}

impl ScenarioSpec {
    /// One segment of constant inputs, starting at rest at the origin.
    pub fn constant(a_body: Vec3, w_body: Vec3, imu_rate: f64, duration: f64) -> Self {
        ScenarioSpec {
            initial: NavState::at_rest(Timestamp::ZERO),
            segments: vec![SegmentSpec {
                duration,
                a_body,
                w_body,
            }],
            imu_rate,
            gravity: GRAVITY,
            noise: None,
        }
    }

    /// Sample counts per segment.
    pub fn validate(&self) -> Result<Vec<usize>> {
        if !(self.imu_rate.is_finite() && self.imu_rate > 0.0) {
            return Err(invalid("imu_rate", format!("must be a positive rate in Hz, got {}", self.imu_rate)));
        }
        if !self.gravity.iter().all(|g| g.is_finite()) {
            return Err(invalid("gravity", "must be finite"));
        }
        if self.segments.is_empty() {
            return Err(invalid("segment", "at least one segment is required"));
        }
        if let Some(n) = &self.noise {
            if !(n.gyro >= 0.0 && n.gyro.is_finite() && n.accel >= 0.0 && n.accel.is_finite()) {
                return Err(invalid("noise", "standard deviations must be finite and non-negative"));
            }
        }
        let x = &self.initial;
        if !(x.p.iter().chain(x.v.iter()).chain(x.rot.matrix().iter()).all(|v| v.is_finite())) {
            return Err(invalid("initial", "must be finite"));
        }
        self.segments
            .iter()
            .enumerate()
            .map(|(i, s)| {
                let field = format!("segment[{i}].duration");
                if !(s.duration.is_finite() && s.duration > 0.0) {
                    return Err(invalid(field, format!("must be positive, got {}", s.duration)));
                }
                if !s.a_body.iter().chain(s.w_body.iter()).all(|v| v.is_finite()) {
                    return Err(invalid(format!("segment[{i}]"), "inputs must be finite"));
                }
                let n = (s.duration * self.imu_rate).round();
                if n < 1.0 || (s.duration - n / self.imu_rate).abs() > COMMENSURATE_TOL {
                    return Err(invalid(
                        field,
                        format!(
                            "{} s is not a whole number of {} Hz sample periods",
                            s.duration, self.imu_rate
                        ),
                    ));
                }
                Ok(n as usize)
            })
            .collect()
    }

    /// Timestamp of sample `k` (and of the closing instant for `k = N`).
    fn stamp(&self, k: usize) -> Timestamp {
        let offset = (k as f64 * 1e9 / self.imu_rate).round() as i64;
        self.initial.t.add_nanos(offset)
    }

    /// Noise-free samples and the closing timestamp.
    fn clean_samples(&self) -> Result<(Vec<ImuSample>, Timestamp)> {
        let counts = self.validate()?;
        let mut samples = Vec::with_capacity(counts.iter().sum());
        for (seg, &n) in self.segments.iter().zip(&counts) {
            for _ in 0..n {
                samples.push(ImuSample {
                    t: self.stamp(samples.len()),
                    w: seg.w_body,
                    a: seg.a_body,
                });
            }
        }
        let end = self.stamp(samples.len());
        Ok((samples, end))
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Simulation {
    pub samples: Vec<ImuSample>,
    /// States at every sample instant plus the closing instant.
    pub truth: Trajectory,
}

impl Simulation {
    pub fn end(&self) -> Timestamp {
        self.truth.last().t
    }
}

/// Samples (with optional seeded Gaussian noise) and exact truth.
pub fn generate(scenario: &ScenarioSpec, seed: u64) -> Result<Simulation> {
    let (mut samples, end) = scenario.clean_samples()?;
    let truth = integrate(Model::Proposed, &scenario.initial, &samples, end, &scenario.gravity)?;

    if let Some(noise) = scenario.noise.filter(|n| n.gyro > 0.0 || n.accel > 0.0) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let gyro = Normal::new(0.0, noise.gyro).expect("validated std");
        let accel = Normal::new(0.0, noise.accel).expect("validated std");
        for s in &mut samples {
            s.w += Vec3::from_fn(|_, _| gyro.sample(&mut rng));
            s.a += Vec3::from_fn(|_, _| accel.sample(&mut rng));
        }
    }

    Ok(Simulation {
        samples,
        truth: Trajectory::new(truth)?,
    })
}

/// Truth recomputed with every IMU interval split into `substeps` equal
/// proposed-model steps. States are reported at the sample instants.
pub fn fine_oracle(scenario: &ScenarioSpec, substeps: usize) -> Result<Trajectory> {
    if substeps < 10 {
        return Err(invalid("substeps", format!("must be at least 10, got {substeps}")));
    }
    let (samples, end) = scenario.clean_samples()?;
    let g = scenario.gravity;
    let mut renorm = Renormalizer::default();
    let mut x = NavState {
        t: samples[0].t,
        ..scenario.initial
    };
    let mut out = Vec::with_capacity(samples.len() + 1);
    out.push(x);
    for (k, s) in samples.iter().enumerate() {
        let next = samples.get(k + 1).map_or(end, |n| n.t);
        let h = next.secs_since(s.t) / substeps as f64;
        for _ in 0..substeps {
            x = step_proposed(&x, &s.a, &s.w, h, &g)?;
        }
        x.t = next;
        x.rot = renorm.apply(x.rot);
        out.push(x);
    }
    Trajectory::new(out)
}

// On-disk scenario description.

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ScenarioFile {
    imu_rate: f64,
    #[serde(default)]
    gravity: Option<[f64; 3]>,
    #[serde(default)]
    start_time: Option<f64>,
    #[serde(default)]
    initial: InitialFile,
    #[serde(default)]
    noise: Option<NoiseFile>,
    #[serde(default)]
    segment: Vec<SegmentFile>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct InitialFile {
    #[serde(default)]
    position: [f64; 3],
    #[serde(default)]
    velocity: [f64; 3],
    /// Body-to-world rotation as a rotation vector, rad.
    #[serde(default)]
    rotation_vector: [f64; 3],
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct NoiseFile {
    #[serde(default)]
    gyro: f64,
    #[serde(default)]
    accel: f64,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct SegmentFile {
    duration: f64,
    #[serde(default)]
    a_body: [f64; 3],
    #[serde(default)]
    w_body: [f64; 3],
}

impl ScenarioSpec {
    /// Parses the TOML scenario format (see the repository README).
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let file: ScenarioFile = toml::from_str(text).map_err(|e| invalid("scenario", e.message().to_string()))?;
        let rotation: RotationMatrix = mat_e(&Vec3::from(file.initial.rotation_vector));
        let start = file.start_time.unwrap_or(0.0);
        if !start.is_finite() {
            return Err(invalid("start_time", "must be finite"));
        }
        let spec = ScenarioSpec {
            initial: NavState::new(
                Timestamp::from_secs_f64(start),
                Vec3::from(file.initial.position),
                Vec3::from(file.initial.velocity),
                rotation,
            ),
            segments: file
                .segment
                .iter()
                .map(|s| SegmentSpec {
                    duration: s.duration,
                    a_body: Vec3::from(s.a_body),
                    w_body: Vec3::from(s.w_body),
                })
                .collect(),
            imu_rate: file.imu_rate,
            gravity: file.gravity.map_or(GRAVITY, Vec3::from),
            noise: file.noise.map(|n| NoiseSpec {
                gyro: n.gyro,
                accel: n.accel,
            }),
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::from_toml_str(&text)
    }
}
