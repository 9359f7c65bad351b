//! Single-step and batch IMU integration under both acceleration models.
//!
//! *Classical*: the world-frame acceleration is held constant over each
//! sample interval. *Proposed*: the body-frame acceleration and angular rate
//! are held constant, which the `Γ`/`Λ` matrices integrate exactly.
//!
//! Both share the rotation update `R ← R·E(ω Δt)`.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{ensure_finite3, Error, Result};
use crate::so3::{
    mat_e, mat_gamma, mat_lambda, orthonormality_residual, project_to_rotation, RotationMatrix,
    Vec3,
};
use crate::time::Timestamp;

/// Standard gravity in the world frame (z up).
pub const GRAVITY: Vec3 = Vec3::new(0.0, 0.0, -9.81);

/// One body-frame IMU reading, held constant until the next sample.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ImuSample {
    pub t: Timestamp,
    /// Angular rate, rad/s.
    pub w: Vec3,
    /// Specific force, m/s². `a_world = R·a + g`.
    pub a: Vec3,
}

/// Position, velocity (world frame) and body-to-world rotation.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct NavState {
    pub t: Timestamp,
    pub p: Vec3,
    pub v: Vec3,
    pub rot: RotationMatrix,
}

impl NavState {
    pub fn new(t: Timestamp, p: Vec3, v: Vec3, rot: RotationMatrix) -> Self {
        NavState { t, p, v, rot }
    }

    pub fn at_rest(t: Timestamp) -> Self {
        NavState::new(t, Vec3::zeros(), Vec3::zeros(), RotationMatrix::identity())
    }

    fn check(&self) -> Result<()> {
        ensure_finite3(&self.p, "position")?;
        ensure_finite3(&self.v, "velocity")?;
        if !self.rot.matrix().iter().all(|x| x.is_finite()) {
            return Err(Error::NonFinite("rotation"));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Model {
    /// Constant world-frame acceleration per interval.
    Classical,
    /// Constant body-frame acceleration per interval.
    Proposed,
}

impl Model {
    pub const ALL: [Model; 2] = [Model::Classical, Model::Proposed];

    pub fn name(self) -> &'static str {
        match self {
            Model::Classical => "classical",
            Model::Proposed => "proposed",
        }
    }
}

impl fmt::Display for Model {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Model {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "classical" => Ok(Model::Classical),
            "proposed" => Ok(Model::Proposed),
            other => Err(format!("unknown model '{other}' (expected classical|proposed)")),
        }
    }
}

/// Velocity and position increments, in the frame of `rot`, produced by a
/// body-frame specific force `a` held for `dt` while rotating by `theta`.
fn increments(model: Model, a: &Vec3, theta: &Vec3, dt: f64) -> (Vec3, Vec3) {
    match model {
        Model::Classical => (a * dt, a * (0.5 * dt * dt)),
        Model::Proposed => (mat_gamma(theta) * a * dt, mat_lambda(theta) * a * (dt * dt)),
    }
}

fn check_step(x: &NavState, a: &Vec3, w: &Vec3, dt: f64, g: &Vec3) -> Result<()> {
    if !dt.is_finite() {
        return Err(Error::NonFinite("dt"));
    }
    if dt <= 0.0 {
        return Err(Error::NonPositiveStep(dt));
    }
    ensure_finite3(a, "acceleration")?;
    ensure_finite3(w, "angular velocity")?;
    ensure_finite3(g, "gravity")?;
    x.check()
}

/// Advances `x` by `dt` seconds with inputs held constant.
///
/// The returned timestamp is `x.t + dt` rounded to the nanosecond.
pub fn step(model: Model, x: &NavState, a: &Vec3, w: &Vec3, dt: f64, g: &Vec3) -> Result<NavState> {
    check_step(x, a, w, dt, g)?;
    let theta = w * dt;
    let (dv, dp) = increments(model, a, &theta, dt);
    Ok(NavState {
        t: x.t.add_nanos((dt * 1e9).round() as i64),
        p: x.p + x.v * dt + g * (0.5 * dt * dt) + x.rot * dp,
        v: x.v + g * dt + x.rot * dv,
        rot: x.rot * mat_e(&theta),
    })
}

pub fn step_classical(x: &NavState, a: &Vec3, w: &Vec3, dt: f64, g: &Vec3) -> Result<NavState> {
    step(Model::Classical, x, a, w, dt, g)
}

pub fn step_proposed(x: &NavState, a: &Vec3, w: &Vec3, dt: f64, g: &Vec3) -> Result<NavState> {
    step(Model::Proposed, x, a, w, dt, g)
}

/// Keeps long rotation chains on SO(3): projects every `EVERY` updates, or
/// as soon as the orthonormality residual exceeds `TOLERANCE`.
#[derive(Debug, Default)]
pub struct Renormalizer {
    count: usize,
}

impl Renormalizer {
    pub const EVERY: usize = 1000;
    pub const TOLERANCE: f64 = 1e-7;

    pub fn apply(&mut self, r: RotationMatrix) -> RotationMatrix {
        self.count += 1;
        if self.count.is_multiple_of(Self::EVERY) || orthonormality_residual(r.matrix()) > Self::TOLERANCE {
            project_to_rotation(r.matrix())
        } else {
            r
        }
    }
}

fn check_stream(samples: &[ImuSample], end: Timestamp) -> Result<()> {
    if samples.is_empty() {
        return Err(Error::EmptyInput);
    }
    for (k, s) in samples.iter().enumerate() {
        ensure_finite3(&s.a, "acceleration")?;
        ensure_finite3(&s.w, "angular velocity")?;
        let next = samples.get(k + 1).map_or(end, |n| n.t);
        if next <= s.t {
            return Err(Error::NonMonotone { index: k + 1 });
        }
    }
    Ok(())
}

fn intervals(samples: &[ImuSample], end: Timestamp) -> impl Iterator<Item = (&ImuSample, Timestamp)> {
    samples
        .iter()
        .enumerate()
        .map(move |(k, s)| (s, samples.get(k + 1).map_or(end, |n| n.t)))
}

/// Iterated stepping over a sample stream. Sample `k` is held over
/// `[t_k, t_{k+1})`, the last one until `end`. Returns the `n + 1` states
/// at `t_0, …, t_{n−1}, end`; `initial.t` is replaced by `t_0`.
pub fn integrate(
    model: Model,
    initial: &NavState,
    samples: &[ImuSample],
    end: Timestamp,
    g: &Vec3,
) -> Result<Vec<NavState>> {
    check_stream(samples, end)?;
    let mut renorm = Renormalizer::default();
    let mut x = NavState {
        t: samples[0].t,
        ..*initial
    };
    let mut out = Vec::with_capacity(samples.len() + 1);
    out.push(x);
    for (s, next) in intervals(samples, end) {
        let dt = next.secs_since(s.t);
        x = step(model, &x, &s.a, &s.w, dt, g)?;
        x.t = next;
        x.rot = renorm.apply(x.rot);
        out.push(x);
    }
    Ok(out)
}

/// Compound measurement between two keyframes.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PreintDelta {
    /// Accumulated rotation `F(i,j) = Π E(θ_k)`.
    pub rot: RotationMatrix,
    /// Position compound in the body frame at `i`, m.
    pub zeta: Vec3,
    /// Velocity compound in the body frame at `i`, m/s.
    pub mu: Vec3,
    /// `Σ Δt`, s.
    pub elapsed: f64,
    /// Exact span in nanoseconds.
    pub span_ns: i64,
    pub model: Model,
}

impl PreintDelta {
    pub fn identity(model: Model) -> Self {
        PreintDelta {
            rot: RotationMatrix::identity(),
            zeta: Vec3::zeros(),
            mu: Vec3::zeros(),
            elapsed: 0.0,
            span_ns: 0,
            model,
        }
    }

    /// Folds one held sample into the delta.
    pub fn push(&mut self, a: &Vec3, w: &Vec3, dt: f64) {
        let theta = w * dt;
        let (dv, dp) = increments(self.model, a, &theta, dt);
        self.zeta += self.rot * dp + self.mu * dt;
        self.mu += self.rot * dv;
        self.rot *= mat_e(&theta);
        self.elapsed += dt;
    }
}

/// Folds all samples up to `end` into one [`PreintDelta`].
pub fn preintegrate(samples: &[ImuSample], end: Timestamp, model: Model) -> Result<PreintDelta> {
    check_stream(samples, end)?;
    let mut delta = PreintDelta::identity(model);
    let mut renorm = Renormalizer::default();
    for (s, next) in intervals(samples, end) {
        delta.push(&s.a, &s.w, next.secs_since(s.t));
        delta.rot = renorm.apply(delta.rot);
    }
    delta.span_ns = end.nanos() - samples[0].t.nanos();
    Ok(delta)
}

/// Delta between keyframe sample indices `i < j`: measurements `i..j`,
/// closed by the timestamp of sample `j`.
pub fn preintegrate_window(samples: &[ImuSample], i: usize, j: usize, model: Model) -> Result<PreintDelta> {
    if i >= j || j >= samples.len() {
        return Err(Error::EmptyInput);
    }
    preintegrate(&samples[i..j], samples[j].t, model)
}

/// `Θ(i,j) = V(i) ΣΔt + g (ΣΔt)² / 2`, the state-dependent part of the
/// position update.
pub fn theta_term(xi: &NavState, d: &PreintDelta, g: &Vec3) -> Vec3 {
    xi.v * d.elapsed + g * (0.5 * d.elapsed * d.elapsed)
}

/// State at keyframe `j` from the state at `i` and the delta between them.
pub fn apply_delta(xi: &NavState, d: &PreintDelta, g: &Vec3) -> NavState {
    NavState {
        t: xi.t.add_nanos(d.span_ns),
        p: xi.p + theta_term(xi, d, g) + xi.rot * d.zeta,
        v: xi.v + g * d.elapsed + xi.rot * d.mu,
        rot: xi.rot * d.rot,
    }
}

/// Rigid transform taking body-`i` coordinates to body-`j` coordinates.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Transform {
    pub rot: RotationMatrix,
    pub trans: Vec3,
}

impl Transform {
    pub fn identity() -> Self {
        Transform {
            rot: RotationMatrix::identity(),
            trans: Vec3::zeros(),
        }
    }

    pub fn apply(&self, x: &Vec3) -> Vec3 {
        self.rot * x + self.trans
    }

    /// Pose `(R_j, p_j)` implied by this transform and the pose at `i`.
    pub fn pose_from(&self, xi: &NavState) -> (RotationMatrix, Vec3) {
        let rot_j = xi.rot * self.rot.inverse();
        (rot_j, xi.p - rot_j * self.trans)
    }
}

/// `T(i,j)`: rotation `Fᵀ`, translation `−Fᵀ(ζ + R(i)ᵀ Θ(i,j))`.
pub fn transform_between(xi: &NavState, d: &PreintDelta, g: &Vec3) -> Transform {
    let f_t = d.rot.inverse();
    let trans = -(f_t * (d.zeta + xi.rot.inverse() * theta_term(xi, d, g)));
    Transform { rot: f_t, trans }
}
