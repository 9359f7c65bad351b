//! Dead reckoning over keyframes and side-by-side model comparison.
//!
//! With a reset period, the stream is cut into windows; each window starts
//! from the ground-truth state at its first sample and is dead-reckoned
//! keyframe to keyframe by chaining preintegrated deltas. Errors are taken
//! against truth in its own frame (both estimates start from truth, so no
//! alignment is applied).

use crate::error::{Error, Result};
use crate::eval::{compute_errors, improvement_percent, AlignmentResult, ErrorReport};
use crate::io::{select_keyframes, Trajectory, ASSOCIATION_TOLERANCE_NS};
use crate::preint::{apply_delta, preintegrate_window, ImuSample, Model, NavState};
use crate::so3::Vec3;
use crate::time::Timestamp;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct WindowConfig {
    /// Keyframe rate inside each window, Hz.
    pub keyframe_hz: f64,
    /// Reinitialize from truth every this many seconds; `None` runs one window.
    pub reset_every: Option<f64>,
    pub gravity: Vec3,
}

/// States at `keyframes[1..]` dead-reckoned from `initial` at `keyframes[0]`.
pub fn dead_reckon(
    model: Model,
    samples: &[ImuSample],
    keyframes: &[usize],
    initial: &NavState,
    g: &Vec3,
) -> Result<Vec<NavState>> {
    let mut x = NavState {
        t: samples[keyframes[0]].t,
        ..*initial
    };
    let mut out = Vec::with_capacity(keyframes.len().saturating_sub(1));
    for pair in keyframes.windows(2) {
        let d = preintegrate_window(samples, pair[0], pair[1], model)?;
        x = apply_delta(&x, &d, g);
        x.t = samples[pair[1]].t;
        out.push(x);
    }
    Ok(out)
}

/// Sample-index ranges `[start, end]` of the reset windows.
pub fn window_bounds(samples: &[ImuSample], reset_every: Option<f64>) -> Result<Vec<(usize, usize)>> {
    if samples.len() < 2 {
        return Err(Error::EmptyInput);
    }
    let bounds = match reset_every {
        None => vec![0, samples.len() - 1],
        Some(p) if p.is_finite() && p > 0.0 => select_keyframes(samples, 1.0 / p)?,
        Some(p) => {
            return Err(Error::Scenario {
                field: "reset-every".into(),
                reason: format!("must be a positive period, got {p}"),
            })
        }
    };
    Ok(bounds.windows(2).map(|w| (w[0], w[1])).collect())
}

#[derive(Clone, Debug, PartialEq)]
pub struct WindowedEstimate {
    /// First window start followed by every dead-reckoned keyframe state.
    pub trajectory: Trajectory,
    /// Per window: start time and the indices of its states in `trajectory`.
    pub windows: Vec<(Timestamp, std::ops::Range<usize>)>,
    /// Windows skipped for lack of a truth state at their start.
    pub skipped: usize,
}

fn truth_at(truth: &Trajectory, t: Timestamp) -> Option<NavState> {
    let j = truth.nearest(t);
    let x = truth.states()[j];
    ((x.t.nanos() - t.nanos()).abs() <= ASSOCIATION_TOLERANCE_NS).then_some(x)
}

/// Dead reckoning with optional periodic resets to truth.
///
/// Without `truth` the run starts at rest (identity attitude) and resets are
/// rejected.
pub fn windowed_estimate(
    model: Model,
    samples: &[ImuSample],
    truth: Option<&Trajectory>,
    cfg: &WindowConfig,
) -> Result<WindowedEstimate> {
    if truth.is_none() && cfg.reset_every.is_some() {
        return Err(Error::Scenario {
            field: "reset-every".into(),
            reason: "resets need a ground-truth file".into(),
        });
    }
    let mut states: Vec<NavState> = Vec::new();
    let mut windows = Vec::new();
    let mut skipped = 0;
    for (start, end) in window_bounds(samples, cfg.reset_every)? {
        let t0 = samples[start].t;
        let initial = match truth {
            Some(tr) => match truth_at(tr, t0) {
                Some(x) => x,
                None => {
                    skipped += 1;
                    continue;
                }
            },
            None => NavState::at_rest(t0),
        };
        let keyframes: Vec<usize> = select_keyframes(&samples[start..=end], cfg.keyframe_hz)?
            .into_iter()
            .map(|k| k + start)
            .collect();
        if states.last().is_none_or(|x| x.t < t0) {
            states.push(NavState { t: t0, ..initial });
        }
        let from = states.len();
        states.extend(dead_reckon(model, samples, &keyframes, &initial, &cfg.gravity)?);
        windows.push((t0, from..states.len()));
    }
    Ok(WindowedEstimate {
        trajectory: Trajectory::new(states)?,
        windows,
        skipped,
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct WindowRow {
    pub start: Timestamp,
    pub classical_rmse: f64,
    pub proposed_rmse: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct CompareReport {
    pub classical: ErrorReport,
    pub proposed: ErrorReport,
    /// `None` when the classical RMSE is zero and the models differ.
    pub improvement: Option<f64>,
    pub windows: Vec<WindowRow>,
    pub skipped_windows: usize,
}

impl CompareReport {
    pub fn median_classical(&self) -> f64 {
        median(self.windows.iter().map(|w| w.classical_rmse))
    }

    pub fn median_proposed(&self) -> f64 {
        median(self.windows.iter().map(|w| w.proposed_rmse))
    }

    /// Windows in which the proposed model is at least as accurate.
    pub fn proposed_wins(&self) -> usize {
        self.windows.iter().filter(|w| w.proposed_rmse <= w.classical_rmse).count()
    }
}

pub fn median(values: impl Iterator<Item = f64>) -> f64 {
    let mut v: Vec<f64> = values.collect();
    if v.is_empty() {
        return f64::NAN;
    }
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

fn window_rmse(est: &Trajectory, range: &std::ops::Range<usize>, truth: &Trajectory) -> Result<f64> {
    let part = Trajectory::new(est.states()[range.clone()].to_vec())?;
    Ok(compute_errors(&part, truth, &AlignmentResult::identity())?.rmse)
}

/// Runs both models over the same samples and scores them against truth.
pub fn compare(samples: &[ImuSample], truth: &Trajectory, cfg: &WindowConfig) -> Result<CompareReport> {
    let classical = windowed_estimate(Model::Classical, samples, Some(truth), cfg)?;
    let proposed = windowed_estimate(Model::Proposed, samples, Some(truth), cfg)?;
    let identity = AlignmentResult::identity();
    let c_report = compute_errors(&classical.trajectory, truth, &identity)?;
    let p_report = compute_errors(&proposed.trajectory, truth, &identity)?;

    let mut windows = Vec::with_capacity(classical.windows.len());
    for ((t, rc), (_, rp)) in classical.windows.iter().zip(&proposed.windows) {
        if rc.is_empty() {
            continue;
        }
        windows.push(WindowRow {
            start: *t,
            classical_rmse: window_rmse(&classical.trajectory, rc, truth)?,
            proposed_rmse: window_rmse(&proposed.trajectory, rp, truth)?,
        });
    }

    let improvement = if c_report.rmse == p_report.rmse {
        Some(0.0)
    } else {
        improvement_percent(c_report.rmse, p_report.rmse).ok()
    };
    Ok(CompareReport {
        classical: c_report,
        proposed: p_report,
        improvement,
        windows,
        skipped_windows: classical.skipped,
    })
}
