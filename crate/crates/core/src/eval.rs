//! Rigid alignment of an estimate onto ground truth and position-error
//! statistics.

use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::io::{associate, Association, Trajectory, ASSOCIATION_TOLERANCE_NS};
use crate::so3::{project_to_rotation, rotation_angle, Mat3, RotationMatrix, Vec3};
use crate::time::Timestamp;

/// Rigid map `p ↦ rot·p + trans` applied to the estimate.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AlignmentResult {
    pub rot: RotationMatrix,
    pub trans: Vec3,
}

impl AlignmentResult {
    pub fn identity() -> Self {
        AlignmentResult {
            rot: RotationMatrix::identity(),
            trans: Vec3::zeros(),
        }
    }

    pub fn apply(&self, p: &Vec3) -> Vec3 {
        self.rot * p + self.trans
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ErrorReport {
    pub rmse: f64,
    pub per_axis_rmse: Vec3,
    /// Aligned estimate minus truth at each matched estimate stamp.
    pub per_sample_errors: Vec<(Timestamp, Vec3)>,
    /// Geodesic attitude RMSE after alignment, rad.
    pub rotation_rmse: f64,
    pub count: usize,
    /// Estimate states without a truth stamp within tolerance.
    pub dropped: usize,
}

/// Least-squares rotation and translation (no scale) taking `from` onto `to`.
pub fn align_points(from: &[Vec3], to: &[Vec3]) -> Result<AlignmentResult> {
    assert_eq!(from.len(), to.len(), "point sets must be paired");
    let n = from.len();
    if n < 3 {
        return Err(Error::TooFewPairs(n));
    }
    let mean = |pts: &[Vec3]| pts.iter().sum::<Vec3>() / n as f64;
    let (cf, ct) = (mean(from), mean(to));

    let mut cov = Mat3::zeros();
    let mut scatter = Mat3::zeros();
    for (a, b) in from.iter().zip(to) {
        let (da, db) = (a - cf, b - ct);
        cov += db * da.transpose();
        scatter += da * da.transpose();
    }

    let spread = scatter.symmetric_eigenvalues();
    let mut spread: Vec<f64> = spread.iter().copied().collect();
    spread.sort_by(|a, b| b.total_cmp(a));
    if spread[0] <= 0.0 || spread[1] <= 1e-12 * spread[0] {
        return Err(Error::Degenerate("matched positions are collinear"));
    }

    // maximizes tr(Rᵀ·cov), i.e. minimizes the summed squared residual
    let rot = project_to_rotation(&cov);
    Ok(AlignmentResult {
        rot,
        trans: ct - rot * cf,
    })
}

fn matched(estimate: &Trajectory, truth: &Trajectory) -> Association {
    associate(estimate, truth, ASSOCIATION_TOLERANCE_NS)
}

/// Aligns estimate positions onto truth over all time-matched pairs.
pub fn align_rigid(estimate: &Trajectory, truth: &Trajectory) -> Result<AlignmentResult> {
    let assoc = matched(estimate, truth);
    let (from, to): (Vec<Vec3>, Vec<Vec3>) = assoc
        .pairs
        .iter()
        .map(|&(i, j)| (estimate.states()[i].p, truth.states()[j].p))
        .unzip();
    align_points(&from, &to)
}

pub fn compute_errors(estimate: &Trajectory, truth: &Trajectory, alignment: &AlignmentResult) -> Result<ErrorReport> {
    let assoc = matched(estimate, truth);
    if assoc.pairs.is_empty() {
        return Err(Error::TooFewPairs(0));
    }
    let mut per_sample = Vec::with_capacity(assoc.pairs.len());
    let mut sq = Vec3::zeros();
    let mut rot_sq = 0.0;
    for &(i, j) in &assoc.pairs {
        let est = &estimate.states()[i];
        let gt = &truth.states()[j];
        let e = alignment.apply(&est.p) - gt.p;
        sq += e.component_mul(&e);
        let rel = (alignment.rot * est.rot).inverse() * gt.rot;
        rot_sq += rotation_angle(&rel).powi(2);
        per_sample.push((est.t, e));
    }
    let n = assoc.pairs.len() as f64;
    let per_axis_ms = sq / n;
    Ok(ErrorReport {
        rmse: (per_axis_ms.sum()).sqrt(),
        per_axis_rmse: per_axis_ms.map(f64::sqrt),
        per_sample_errors: per_sample,
        rotation_rmse: (rot_sq / n).sqrt(),
        count: assoc.pairs.len(),
        dropped: assoc.dropped,
    })
}

/// Alignment followed by error statistics.
pub fn evaluate(estimate: &Trajectory, truth: &Trajectory) -> Result<(AlignmentResult, ErrorReport)> {
    let alignment = align_rigid(estimate, truth)?;
    let report = compute_errors(estimate, truth, &alignment)?;
    Ok((alignment, report))
}

/// Relative RMSE reduction, percent.
pub fn improvement_percent(base_rmse: f64, new_rmse: f64) -> Result<f64> {
    if base_rmse <= 0.0 || !base_rmse.is_finite() {
        return Err(Error::ZeroBaseline(base_rmse));
    }
    Ok(100.0 * (base_rmse - new_rmse) / base_rmse)
}

/// Per-sample rows: `t, ex, ey, ez, norm`.
pub fn format_error_rows(report: &ErrorReport) -> String {
    let mut s = String::from("# t, ex, ey, ez, norm\n");
    for (t, e) in &report.per_sample_errors {
        let _ = writeln!(s, "{t}, {}, {}, {}, {}", e.x, e.y, e.z, e.norm());
    }
    s
}

/// `key = value` lines, one statistic each, keys prefixed by `prefix`.
pub fn format_summary(report: &ErrorReport, prefix: &str) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "{prefix}rmse = {}", report.rmse);
    let _ = writeln!(s, "{prefix}rmse_x = {}", report.per_axis_rmse.x);
    let _ = writeln!(s, "{prefix}rmse_y = {}", report.per_axis_rmse.y);
    let _ = writeln!(s, "{prefix}rmse_z = {}", report.per_axis_rmse.z);
    let _ = writeln!(s, "{prefix}rotation_rmse = {}", report.rotation_rmse);
    let _ = writeln!(s, "{prefix}count = {}", report.count);
    let _ = writeln!(s, "{prefix}dropped = {}", report.dropped);
    s
}
