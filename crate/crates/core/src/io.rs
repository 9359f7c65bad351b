//! Dataset ingestion and exchange files.
//!
//! | file        | columns                                                          |
//! |-------------|------------------------------------------------------------------|
//! | IMU log     | `timestamp[ns], wx, wy, wz [rad/s], ax, ay, az [m/s²]`            |
//! | ground truth| `timestamp[ns], px, py, pz, qw, qx, qy, qz, vx, vy, vz, …`        |
//! | trajectory  | `t[s], px, py, pz, vx, vy, vz, r11, r12, r13, …, r33`             |
//!
//! All are comma-delimited; lines starting with `#` and blank lines are
//! skipped. Trajectory timestamps carry exactly nine fractional digits.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::preint::{ImuSample, NavState};
use crate::so3::{orthonormality_residual, Mat3, RotationMatrix, Vec3};
use crate::time::Timestamp;

/// Time-ordered states with strictly increasing timestamps.
#[derive(Clone, Debug, PartialEq)]
pub struct Trajectory(Vec<NavState>);

impl Trajectory {
    pub fn new(states: Vec<NavState>) -> Result<Self> {
        if states.is_empty() {
            return Err(Error::EmptyInput);
        }
        if let Some(k) = states.windows(2).position(|w| w[1].t <= w[0].t) {
            return Err(Error::NonMonotone { index: k + 1 });
        }
        Ok(Trajectory(states))
    }

    pub fn states(&self) -> &[NavState] {
        &self.0
    }

    pub fn into_states(self) -> Vec<NavState> {
        self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn iter(&self) -> std::slice::Iter<'_, NavState> {
        self.0.iter()
    }

    pub fn first(&self) -> &NavState {
        &self.0[0]
    }

    pub fn last(&self) -> &NavState {
        &self.0[self.0.len() - 1]
    }

    /// Index of the state nearest in time to `t`.
    pub fn nearest(&self, t: Timestamp) -> usize {
        let i = self.0.partition_point(|x| x.t < t);
        if i == 0 {
            return 0;
        }
        if i == self.0.len() {
            return i - 1;
        }
        let before = t.nanos() - self.0[i - 1].t.nanos();
        let after = self.0[i].t.nanos() - t.nanos();
        if after < before {
            i
        } else {
            i - 1
        }
    }
}

/// Keyframe boundaries as sample indices.
pub type KeyframeIndex = Vec<usize>;

/// Matching tolerance between estimate and ground-truth stamps.
pub const ASSOCIATION_TOLERANCE_NS: i64 = 1_000_000;

const QUAT_NORM_TOL: f64 = 1e-3;
const ROTATION_FILE_TOL: f64 = 1e-6;

fn io_err(path: &Path, source: std::io::Error) -> Error {
    Error::Io {
        path: path.to_path_buf(),
        source,
    }
}

fn parse_err(path: &Path, line: usize, reason: impl Into<String>) -> Error {
    Error::Parse {
        path: path.to_path_buf(),
        line,
        reason: reason.into(),
    }
}

/// Data rows of a delimited file as `(1-based line number, fields)`.
/// `#` lines are comments; blank lines are skipped; fields are trimmed.
fn rows(path: &Path) -> Result<Vec<(usize, Vec<String>)>> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .flexible(true)
        .from_path(path)
        .map_err(|e| csv_err(path, e))?;
    let mut out = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| csv_err(path, e))?;
        let line = record.position().map_or(0, |p| p.line() as usize);
        out.push((line, record.iter().map(str::to_string).collect()));
    }
    Ok(out)
}

fn csv_err(path: &Path, e: csv::Error) -> Error {
    let line = e.position().map_or(0, |p| p.line() as usize);
    match e.into_kind() {
        csv::ErrorKind::Io(source) => io_err(path, source),
        other => parse_err(path, line, format!("{other:?}")),
    }
}

fn parse_f64(path: &Path, line: usize, col: usize, s: &str) -> Result<f64> {
    let v: f64 = s
        .parse()
        .map_err(|_| parse_err(path, line, format!("column {}: '{s}' is not a number", col + 1)))?;
    if !v.is_finite() {
        return Err(parse_err(path, line, format!("column {}: non-finite value", col + 1)));
    }
    Ok(v)
}

fn parse_vec3(path: &Path, line: usize, fields: &[String], from: usize) -> Result<Vec3> {
    Ok(Vec3::new(
        parse_f64(path, line, from, &fields[from])?,
        parse_f64(path, line, from + 1, &fields[from + 1])?,
        parse_f64(path, line, from + 2, &fields[from + 2])?,
    ))
}

fn parse_nanos(path: &Path, line: usize, s: &str) -> Result<Timestamp> {
    s.parse::<i64>()
        .map(Timestamp::from_nanos)
        .map_err(|_| parse_err(path, line, format!("timestamp '{s}' is not an integer nanosecond count")))
}

fn check_increasing(path: &Path, prev: Option<(Timestamp, usize)>, t: Timestamp, line: usize) -> Result<()> {
    if let Some((p, pline)) = prev {
        if t <= p {
            return Err(parse_err(
                path,
                line,
                format!("timestamp {t} does not increase (previous row at line {pline})"),
            ));
        }
    }
    Ok(())
}

/// Reads an EuRoC-style IMU log: `timestamp[ns], w_xyz, a_xyz`.
pub fn read_imu_log(path: &Path) -> Result<Vec<ImuSample>> {
    let mut out = Vec::new();
    let mut prev = None;
    for (line, f) in rows(path)? {
        if f.len() != 7 {
            return Err(parse_err(path, line, format!("expected 7 fields, found {}", f.len())));
        }
        let t = parse_nanos(path, line, &f[0])?;
        check_increasing(path, prev, t, line)?;
        prev = Some((t, line));
        out.push(ImuSample {
            t,
            w: parse_vec3(path, line, &f, 1)?,
            a: parse_vec3(path, line, &f, 4)?,
        });
    }
    Ok(out)
}

/// Rotation of a `(w, x, y, z)` quaternion. Expects a unit quaternion.
pub fn quaternion_to_rotation(q: [f64; 4]) -> Mat3 {
    let [w, x, y, z] = q;
    Mat3::new(
        1.0 - 2.0 * (y * y + z * z),
        2.0 * (x * y - w * z),
        2.0 * (x * z + w * y),
        2.0 * (x * y + w * z),
        1.0 - 2.0 * (x * x + z * z),
        2.0 * (y * z - w * x),
        2.0 * (x * z - w * y),
        2.0 * (y * z + w * x),
        1.0 - 2.0 * (x * x + y * y),
    )
}

/// Unit `(w, x, y, z)` quaternion of a rotation matrix, with `w ≥ 0`.
pub fn rotation_to_quaternion(r: &Mat3) -> [f64; 4] {
    let trace = r.trace();
    let q = if trace > 0.0 {
        let s = 2.0 * (trace + 1.0).sqrt();
        [
            0.25 * s,
            (r[(2, 1)] - r[(1, 2)]) / s,
            (r[(0, 2)] - r[(2, 0)]) / s,
            (r[(1, 0)] - r[(0, 1)]) / s,
        ]
    } else if r[(0, 0)] > r[(1, 1)] && r[(0, 0)] > r[(2, 2)] {
        let s = 2.0 * (1.0 + r[(0, 0)] - r[(1, 1)] - r[(2, 2)]).sqrt();
        [
            (r[(2, 1)] - r[(1, 2)]) / s,
            0.25 * s,
            (r[(0, 1)] + r[(1, 0)]) / s,
            (r[(0, 2)] + r[(2, 0)]) / s,
        ]
    } else if r[(1, 1)] > r[(2, 2)] {
        let s = 2.0 * (1.0 + r[(1, 1)] - r[(0, 0)] - r[(2, 2)]).sqrt();
        [
            (r[(0, 2)] - r[(2, 0)]) / s,
            (r[(0, 1)] + r[(1, 0)]) / s,
            0.25 * s,
            (r[(1, 2)] + r[(2, 1)]) / s,
        ]
    } else {
        let s = 2.0 * (1.0 + r[(2, 2)] - r[(0, 0)] - r[(1, 1)]).sqrt();
        [
            (r[(1, 0)] - r[(0, 1)]) / s,
            (r[(0, 2)] + r[(2, 0)]) / s,
            (r[(1, 2)] + r[(2, 1)]) / s,
            0.25 * s,
        ]
    };
    let n = q.iter().map(|c| c * c).sum::<f64>().sqrt();
    let sign = if q[0] < 0.0 { -1.0 } else { 1.0 };
    q.map(|c| sign * c / n)
}

/// Reads EuRoC-style ground truth: `timestamp[ns], p_xyz, q_wxyz, v_xyz`,
/// trailing columns ignored. Quaternions within `1e-3` of unit norm are
/// normalized; others are rejected.
pub fn read_groundtruth(path: &Path) -> Result<Trajectory> {
    let mut out = Vec::new();
    let mut prev = None;
    for (line, f) in rows(path)? {
        if f.len() < 11 {
            return Err(parse_err(path, line, format!("expected at least 11 fields, found {}", f.len())));
        }
        let t = parse_nanos(path, line, &f[0])?;
        check_increasing(path, prev, t, line)?;
        prev = Some((t, line));
        let p = parse_vec3(path, line, &f, 1)?;
        let mut q = [0.0; 4];
        for (i, c) in q.iter_mut().enumerate() {
            *c = parse_f64(path, line, 4 + i, &f[4 + i])?;
        }
        let norm = q.iter().map(|c| c * c).sum::<f64>().sqrt();
        if (norm - 1.0).abs() > QUAT_NORM_TOL {
            return Err(parse_err(path, line, format!("quaternion norm {norm} is not unit")));
        }
        let rot = RotationMatrix::from_matrix_unchecked(quaternion_to_rotation(q.map(|c| c / norm)));
        let v = parse_vec3(path, line, &f, 8)?;
        out.push(NavState { t, p, v, rot });
    }
    Trajectory::new(out).map_err(|_| parse_err(path, 0, "no ground-truth rows"))
}

/// Writes through a sibling `.tmp` file and renames it into place.
pub fn write_atomic(path: &Path, contents: &str) -> Result<()> {
    let mut tmp: PathBuf = path.to_path_buf();
    let mut name = path.file_name().map(|n| n.to_os_string()).unwrap_or_default();
    name.push(".tmp");
    tmp.set_file_name(name);
    fs::write(&tmp, contents).map_err(|e| io_err(&tmp, e))?;
    fs::rename(&tmp, path).map_err(|e| io_err(path, e))
}

pub const IMU_HEADER: &str =
    "#timestamp [ns],w_RS_S_x [rad s^-1],w_RS_S_y [rad s^-1],w_RS_S_z [rad s^-1],a_RS_S_x [m s^-2],a_RS_S_y [m s^-2],a_RS_S_z [m s^-2]";

pub const GROUNDTRUTH_HEADER: &str =
    "#timestamp, p_RS_R_x [m], p_RS_R_y [m], p_RS_R_z [m], q_RS_w [], q_RS_x [], q_RS_y [], q_RS_z [], v_RS_R_x [m s^-1], v_RS_R_y [m s^-1], v_RS_R_z [m s^-1]";

pub const TRAJECTORY_HEADER: &str = "# t, px, py, pz, vx, vy, vz, r11, r12, r13, r21, r22, r23, r31, r32, r33";

/// Writes samples in the IMU log format read by [`read_imu_log`].
pub fn write_imu_log(path: &Path, samples: &[ImuSample]) -> Result<()> {
    let mut s = String::with_capacity(64 * (samples.len() + 1));
    s.push_str(IMU_HEADER);
    s.push('\n');
    for x in samples {
        let _ = writeln!(
            s,
            "{},{},{},{},{},{},{}",
            x.t.nanos(),
            x.w.x,
            x.w.y,
            x.w.z,
            x.a.x,
            x.a.y,
            x.a.z
        );
    }
    write_atomic(path, &s)
}

/// Writes ground truth in the format read by [`read_groundtruth`].
pub fn write_groundtruth(path: &Path, traj: &Trajectory) -> Result<()> {
    let mut s = String::new();
    s.push_str(GROUNDTRUTH_HEADER);
    s.push('\n');
    for x in traj.iter() {
        let [qw, qx, qy, qz] = rotation_to_quaternion(x.rot.matrix());
        let _ = writeln!(
            s,
            "{},{},{},{},{},{},{},{},{},{},{}",
            x.t.nanos(),
            x.p.x,
            x.p.y,
            x.p.z,
            qw,
            qx,
            qy,
            qz,
            x.v.x,
            x.v.y,
            x.v.z
        );
    }
    write_atomic(path, &s)
}

/// Trajectory exchange text; `{}` float formatting round-trips exactly.
pub fn format_trajectory(traj: &Trajectory) -> String {
    let mut s = String::new();
    s.push_str(TRAJECTORY_HEADER);
    s.push('\n');
    for x in traj.iter() {
        let _ = write!(s, "{}, {}, {}, {}, {}, {}, {}", x.t, x.p.x, x.p.y, x.p.z, x.v.x, x.v.y, x.v.z);
        let r = x.rot.matrix();
        for i in 0..3 {
            for j in 0..3 {
                let _ = write!(s, ", {}", r[(i, j)]);
            }
        }
        s.push('\n');
    }
    s
}

pub fn write_trajectory(path: &Path, traj: &Trajectory) -> Result<()> {
    write_atomic(path, &format_trajectory(traj))
}

pub fn read_trajectory(path: &Path) -> Result<Trajectory> {
    let mut out = Vec::new();
    let mut prev = None;
    for (line, f) in rows(path)? {
        if f.len() != 16 {
            return Err(parse_err(path, line, format!("expected 16 fields, found {}", f.len())));
        }
        let t: Timestamp = f[0].parse().map_err(|e| parse_err(path, line, format!("{e}")))?;
        check_increasing(path, prev, t, line)?;
        prev = Some((t, line));
        let p = parse_vec3(path, line, &f, 1)?;
        let v = parse_vec3(path, line, &f, 4)?;
        let mut r = Mat3::zeros();
        for i in 0..3 {
            for j in 0..3 {
                let col = 7 + 3 * i + j;
                r[(i, j)] = parse_f64(path, line, col, &f[col])?;
            }
        }
        if orthonormality_residual(&r) > ROTATION_FILE_TOL || r.determinant() < 0.0 {
            return Err(parse_err(path, line, "rotation columns are not a proper rotation"));
        }
        out.push(NavState {
            t,
            p,
            v,
            rot: RotationMatrix::from_matrix_unchecked(r),
        });
    }
    Trajectory::new(out).map_err(|_| parse_err(path, 0, "no trajectory rows"))
}

/// Reads either a trajectory file or EuRoC-style ground truth, telling
/// them apart by the first data row (decimal seconds vs integer ns).
pub fn read_truth(path: &Path) -> Result<Trajectory> {
    let is_trajectory = rows(path)?
        .first()
        .is_some_and(|(_, f)| f[0].contains('.'));
    if is_trajectory {
        read_trajectory(path)
    } else {
        read_groundtruth(path)
    }
}

/// Sample indices nearest to a uniform `rate_hz` grid starting at the first
/// sample. The first and last samples are always included.
pub fn select_keyframes(samples: &[ImuSample], rate_hz: f64) -> Result<KeyframeIndex> {
    if !(rate_hz.is_finite() && rate_hz > 0.0) {
        return Err(Error::Scenario {
            field: "keyframe-hz".into(),
            reason: format!("must be a positive rate, got {rate_hz}"),
        });
    }
    if samples.is_empty() {
        return Ok(Vec::new());
    }
    let t0 = samples[0].t;
    let last = samples.len() - 1;
    let span = samples[last].t.nanos() - t0.nanos();
    let nearest = |target: i64| {
        let i = samples.partition_point(|s| s.t.nanos() - t0.nanos() < target);
        if i == 0 {
            0
        } else if i > last {
            last
        } else {
            let before = target - (samples[i - 1].t.nanos() - t0.nanos());
            let after = samples[i].t.nanos() - t0.nanos() - target;
            if after < before {
                i
            } else {
                i - 1
            }
        }
    };
    let mut out = vec![0];
    for m in 1.. {
        let target = (m as f64 * 1e9 / rate_hz).round() as i64;
        if target > span {
            break;
        }
        let idx = nearest(target);
        if idx > *out.last().unwrap() {
            out.push(idx);
        }
    }
    if *out.last().unwrap() != last {
        out.push(last);
    }
    Ok(out)
}

/// Estimate/truth index pairs matched by nearest timestamp.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Association {
    pub pairs: Vec<(usize, usize)>,
    /// Estimate states with no truth stamp within tolerance.
    pub dropped: usize,
}

pub fn associate(estimate: &Trajectory, truth: &Trajectory, tolerance_ns: i64) -> Association {
    let mut out = Association::default();
    for (i, x) in estimate.iter().enumerate() {
        let j = truth.nearest(x.t);
        if (truth.states()[j].t.nanos() - x.t.nanos()).abs() <= tolerance_ns {
            out.pairs.push((i, j));
        } else {
            out.dropped += 1;
        }
    }
    out
}
