//! Acceptance criteria, one PASS/FAIL line each. Runs without the libtest
//! harness so the lines always reach the console; exits nonzero if any
//! criterion fails.
//!
//! Oracles here are written independently of the library: a hand-built
//! 15×15 system matrix with a plain truncated series, and an RK4 integrator
//! of the continuous rigid-body kinematics.

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::process::{Command, ExitCode};
use std::time::{Duration, Instant};

use nalgebra::{Matrix3, SMatrix, Vector3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use switched_imu::eval::{align_rigid, compute_errors, evaluate, improvement_percent, AlignmentResult};
use switched_imu::io::Trajectory;
use switched_imu::lifted::{exp_a_closed, propagate_lifted, LiftedState};
use switched_imu::preint::{apply_delta, integrate, preintegrate, step_proposed};
use switched_imu::so3::{mat_e, mat_gamma, mat_lambda, skew};
use switched_imu::{ImuSample, Model, NavState, RotationMatrix, Timestamp, Vec3, GRAVITY};

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn check(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn within(limit: Duration, start: Instant) -> Result<Duration, String> {
    let took = start.elapsed();
    if took < limit {
        Ok(took)
    } else {
        Err(format!("took {took:?}, limit {limit:?}"))
    }
}

// ---- independent oracles -------------------------------------------------

fn hat(w: &Vector3<f64>) -> Matrix3<f64> {
    Matrix3::new(0.0, -w.z, w.y, w.z, 0.0, -w.x, -w.y, w.x, 0.0)
}

type M15 = SMatrix<f64, 15, 15>;

/// `A·Δt` for the state `[p; v; rows of R]` under constant body inputs:
/// ṗ = v, v̇ = R a (+ g), and each row of R obeys ṙ = −ω^ r.
fn lifted_system(dt: f64, a: &Vector3<f64>, w: &Vector3<f64>) -> M15 {
    let mut m = M15::zeros();
    for k in 0..3 {
        m[(k, 3 + k)] = dt;
        for c in 0..3 {
            // v_k gains a · r_k
            m[(3 + k, 6 + 3 * k + c)] = a[c] * dt;
        }
        m.fixed_view_mut::<3, 3>(6 + 3 * k, 6 + 3 * k).copy_from(&(-hat(w) * dt));
    }
    m
}

fn series(m: &M15, terms: usize) -> M15 {
    let mut sum = M15::identity();
    let mut term = M15::identity();
    for k in 1..=terms {
        term = term * m / k as f64;
        sum += term;
    }
    sum
}

/// RK4 of ṗ = v, v̇ = R a + g, Ṙ = R ω^ with constant inputs.
fn rk4(x: &NavState, a: &Vec3, w: &Vec3, g: &Vec3, duration: f64, steps: usize) -> (Vec3, Vec3, Matrix3<f64>) {
    let f = |_p: &Vec3, v: &Vec3, r: &Matrix3<f64>| (*v, r * a + g, r * hat(w));
    let (mut p, mut v, mut r) = (x.p, x.v, *x.rot.matrix());
    let h = duration / steps as f64;
    for _ in 0..steps {
        let k1 = f(&p, &v, &r);
        let k2 = f(&(p + k1.0 * h / 2.0), &(v + k1.1 * h / 2.0), &(r + k1.2 * h / 2.0));
        let k3 = f(&(p + k2.0 * h / 2.0), &(v + k2.1 * h / 2.0), &(r + k2.2 * h / 2.0));
        let k4 = f(&(p + k3.0 * h), &(v + k3.1 * h), &(r + k3.2 * h));
        p += (k1.0 + 2.0 * k2.0 + 2.0 * k3.0 + k4.0) * h / 6.0;
        v += (k1.1 + 2.0 * k2.1 + 2.0 * k3.1 + k4.1) * h / 6.0;
        r += (k1.2 + 2.0 * k2.2 + 2.0 * k3.2 + k4.2) * h / 6.0;
    }
    (p, v, r)
}

// ---- random inputs -------------------------------------------------------

fn unit(rng: &mut impl Rng) -> Vec3 {
    loop {
        let v = Vec3::from_fn(|_, _| rng.random_range(-1.0..1.0));
        let n = v.norm();
        if n > 1e-3 && n <= 1.0 {
            return v / n;
        }
    }
}

fn in_ball(rng: &mut impl Rng, radius: f64) -> Vec3 {
    unit(rng) * radius * rng.random::<f64>().cbrt()
}

fn rotation(rng: &mut impl Rng) -> RotationMatrix {
    mat_e(&(unit(rng) * rng.random_range(0.0..std::f64::consts::PI)))
}

fn state(rng: &mut impl Rng) -> NavState {
    NavState::new(Timestamp::ZERO, in_ball(rng, 10.0), in_ball(rng, 5.0), rotation(rng))
}

fn constant_stream(a: Vec3, w: Vec3, rate_hz: f64, duration: f64) -> (Vec<ImuSample>, Timestamp) {
    let n = (rate_hz * duration).round() as i64;
    let period = (1e9 / rate_hz).round() as i64;
    let samples = (0..n)
        .map(|k| ImuSample {
            t: Timestamp::from_nanos(k * period),
            w,
            a,
        })
        .collect();
    (samples, Timestamp::from_nanos(n * period))
}

// ---- criteria ------------------------------------------------------------

fn closed_form_vs_series() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut worst: f64 = 0.0;
    for _ in 0..100 {
        let dt = rng.random_range(0.001..=0.020);
        let theta = unit(&mut rng) * rng.random_range(0.0..=std::f64::consts::FRAC_PI_2);
        let a = in_ball(&mut rng, 20.0);
        let closed = exp_a_closed(dt, &(a * dt), &theta);
        let oracle = series(&lifted_system(dt, &a, &(theta / dt)), 30);
        worst = worst.max((closed - oracle).norm());
    }
    let took = within(Duration::from_secs(1), start)?;
    check(worst <= 1e-10, format!("max Frobenius distance {worst:.3e} (≤ 1e-10), {took:?}"))
}

fn identity_suite() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let i3 = Matrix3::identity();
    let mut worst = [0.0f64; 5];
    for _ in 0..1000 {
        let theta = unit(&mut rng) * rng.random_range(0.0..=std::f64::consts::PI);
        let s = skew(&theta);
        let e = *mat_e(&theta).matrix();
        let residuals = [
            (s * mat_gamma(&theta) + i3 - e).amax(),
            (s * mat_lambda(&theta) + i3 - mat_gamma(&theta)).amax(),
            (s * s * s + s * theta.norm_squared()).amax(),
            (e.transpose() * e - i3).amax(),
            (s - hat(&theta)).amax(),
        ];
        for (w, r) in worst.iter_mut().zip(residuals) {
            *w = w.max(r);
        }
    }
    let took = within(Duration::from_secs(1), start)?;
    let max = worst.iter().copied().fold(0.0, f64::max);
    check(
        max <= 1e-12,
        format!(
            "Γ {:.1e}, Λ {:.1e}, skew³ {:.1e}, EᵀE {:.1e}, skew {:.1e} (≤ 1e-12), {took:?}",
            worst[0], worst[1], worst[2], worst[3], worst[4]
        ),
    )
}

fn equivalence() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut step_gap: f64 = 0.0;
    for _ in 0..1000 {
        let x = state(&mut rng);
        let dt = rng.random_range(0.001..=0.020);
        let a = in_ball(&mut rng, 20.0);
        let w = in_ball(&mut rng, 5.0);
        let compact = step_proposed(&x, &a, &w, dt, &GRAVITY).map_err(|e| e.to_string())?;
        let lifted = propagate_lifted(&LiftedState::new(x.p, x.v, &x.rot), dt, &a, &w, &GRAVITY).map_err(|e| e.to_string())?;
        step_gap = step_gap
            .max((compact.p - lifted.p).amax())
            .max((compact.v - lifted.v).amax())
            .max((compact.rot.matrix() - lifted.rotation_matrix()).amax());
    }

    let mut batch_gap: f64 = 0.0;
    for _ in 0..100 {
        let x0 = state(&mut rng);
        let samples: Vec<ImuSample> = (0..50)
            .map(|k| ImuSample {
                t: Timestamp::from_nanos(5_000_000 * k),
                w: in_ball(&mut rng, 3.0),
                a: in_ball(&mut rng, 20.0),
            })
            .collect();
        let end = Timestamp::from_nanos(5_000_000 * 50);
        for model in Model::ALL {
            let d = preintegrate(&samples, end, model).map_err(|e| e.to_string())?;
            let batch = apply_delta(&x0, &d, &GRAVITY);
            let iterated = *integrate(model, &x0, &samples, end, &GRAVITY).map_err(|e| e.to_string())?.last().unwrap();
            batch_gap = batch_gap
                .max((batch.p - iterated.p).amax())
                .max((batch.v - iterated.v).amax())
                .max((batch.rot.matrix() - iterated.rot.matrix()).amax());
        }
    }
    check(
        step_gap <= 1e-12 && batch_gap <= 1e-11,
        format!("compact vs lifted {step_gap:.1e} (≤ 1e-12), batch vs iterated {batch_gap:.1e} (≤ 1e-11)"),
    )
}

fn final_position_error(model: Model, rate_hz: f64, a: Vec3, w: Vec3, oracle: &Vec3) -> Result<f64, String> {
    let (samples, end) = constant_stream(a, w, rate_hz, 1.0);
    let x0 = NavState::at_rest(Timestamp::ZERO);
    let states = integrate(model, &x0, &samples, end, &GRAVITY).map_err(|e| e.to_string())?;
    Ok((states.last().unwrap().p - oracle).norm())
}

fn exactness_and_ordering() -> Outcome {
    let start = Instant::now();
    let a = Vec3::new(1.0, 0.0, 0.0);
    let w = Vec3::new(0.0, 0.0, 2.0);
    // 100 sub-steps per 100 Hz interval
    let (oracle, _, _) = rk4(&NavState::at_rest(Timestamp::ZERO), &a, &w, &GRAVITY, 1.0, 10_000);
    let p100 = final_position_error(Model::Proposed, 100.0, a, w, &oracle)?;
    let c100 = final_position_error(Model::Classical, 100.0, a, w, &oracle)?;
    let p50 = final_position_error(Model::Proposed, 50.0, a, w, &oracle)?;
    let c50 = final_position_error(Model::Classical, 50.0, a, w, &oracle)?;
    let took = within(Duration::from_secs(1), start)?;
    check(
        p100 <= 1e-9 && c100 >= 10.0 * p100 && c50 > c100 && p50 <= 1e-9,
        format!("100 Hz: proposed {p100:.2e} m, classical {c100:.2e} m; 50 Hz: proposed {p50:.2e} m, classical {c50:.2e} m; {took:?}"),
    )
}

fn fairness_converse() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let rot = rotation(&mut rng);
    let a_world = Vec3::new(0.5, -1.2, 0.3);
    let (samples, end) = constant_stream(rot.inverse() * a_world, Vec3::zeros(), 100.0, 1.0);
    let x0 = NavState::new(Timestamp::ZERO, Vec3::new(2.0, 0.0, -1.0), Vec3::new(1.0, 0.5, 0.0), rot);
    let run = |m| integrate(m, &x0, &samples, end, &GRAVITY).map_err(|e| e.to_string());
    let (c, p) = (run(Model::Classical)?, run(Model::Proposed)?);
    let exact = x0.p + x0.v + (a_world + GRAVITY) * 0.5;
    let c_err = (c.last().unwrap().p - exact).norm();
    let p_err = (p.last().unwrap().p - exact).norm();
    let gap = c
        .iter()
        .zip(&p)
        .map(|(x, y)| (x.p - y.p).amax().max((x.v - y.v).amax()).max((x.rot.matrix() - y.rot.matrix()).amax()))
        .fold(0.0, f64::max);
    check(
        c_err <= 1e-9 && p_err <= 1e-9 && gap <= 1e-12,
        format!("classical {c_err:.1e} m, proposed {p_err:.1e} m (≤ 1e-9), models differ by {gap:.1e} (≤ 1e-12)"),
    )
}

fn reference_percentages() -> Outcome {
    let rows = [
        ("MH_02_easy", 16.70, 16.05, 3.89),
        ("MH_05_difficult", 30.32, 26.95, 11.11),
        ("V1_01_easy", 10.16, 10.29, -1.28),
        ("V1_03_difficult", 31.12, 21.21, 31.84),
        ("V2_01_easy", 7.33, 7.16, 2.32),
        ("V2_03_difficult", 28.10, 22.51, 19.89),
    ];
    let mut worst: f64 = 0.0;
    for (name, base, new, expected) in rows {
        let got = improvement_percent(base, new).map_err(|e| format!("{name}: {e}"))?;
        worst = worst.max((got - expected).abs());
    }
    check(worst <= 0.01, format!("six sequences, max deviation {worst:.4} (≤ 0.01)"))
}

/// Pinned on the first run of the fixture (0.5 s resets, 10 Hz keyframes).
const PINNED_MEDIAN_CLASSICAL: f64 = 0.003629385259426748;
const PINNED_MEDIAN_PROPOSED: f64 = 0.0022763552554215857;

fn summary_value(summary: &str, key: &str) -> Result<f64, String> {
    summary
        .lines()
        .find_map(|l| l.strip_prefix(key)?.strip_prefix(" = "))
        .ok_or_else(|| format!("summary lacks {key}"))?
        .parse()
        .map_err(|e| format!("{key}: {e}"))
}

fn euroc_regression() -> Outcome {
    let fixtures = Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures/euroc");
    let files = ["classical_errors.csv", "proposed_errors.csv", "windows.csv", "summary.txt"];
    let mut outputs = Vec::new();
    for _ in 0..2 {
        let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
        let status = Command::new(env!("CARGO_BIN_EXE_switched-imu"))
            .args(["compare", "--reset-every", "0.5", "--keyframe-hz", "10", "--imu"])
            .arg(fixtures.join("imu.csv"))
            .arg("--truth")
            .arg(fixtures.join("groundtruth.csv"))
            .arg("--out")
            .arg(dir.path())
            .output()
            .map_err(|e| e.to_string())?;
        if !status.status.success() {
            return Err(String::from_utf8_lossy(&status.stderr).into_owned());
        }
        let run: Vec<Vec<u8>> = files
            .iter()
            .map(|f| std::fs::read(dir.path().join(f)))
            .collect::<Result<_, _>>()
            .map_err(|e| e.to_string())?;
        outputs.push(run);
    }
    let deterministic = outputs[0] == outputs[1];
    let summary = String::from_utf8_lossy(&outputs[0][3]).into_owned();
    let c = summary_value(&summary, "median_window_rmse.classical")?;
    let p = summary_value(&summary, "median_window_rmse.proposed")?;
    let windows = summary_value(&summary, "windows")?;
    let pinned = |got: f64, want: f64| ((got - want) / want).abs() <= 1e-9;
    check(
        deterministic && p <= c && windows == 20.0 && pinned(c, PINNED_MEDIAN_CLASSICAL) && pinned(p, PINNED_MEDIAN_PROPOSED),
        format!(
            "deterministic {deterministic}, {windows} windows, median window rmse proposed {:.3} mm vs classical {:.3} mm (pinned)",
            p * 1e3,
            c * 1e3
        ),
    )
}

fn points_to_trajectory(points: &[Vec3]) -> Trajectory {
    Trajectory::new(
        points
            .iter()
            .enumerate()
            .map(|(k, p)| NavState::new(Timestamp::from_nanos(k as i64 * 10_000_000), *p, Vec3::zeros(), RotationMatrix::identity()))
            .collect(),
    )
    .unwrap()
}

fn evaluation_suite() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let mut recover: f64 = 0.0;
    let mut invariance: f64 = 0.0;
    for _ in 0..100 {
        let gt: Vec<Vec3> = (0..20).map(|_| in_ball(&mut rng, 10.0)).collect();
        let rot = rotation(&mut rng);
        let trans = in_ball(&mut rng, 50.0);
        let est: Vec<Vec3> = gt.iter().map(|p| rot * p + trans).collect();
        let a = align_rigid(&points_to_trajectory(&est), &points_to_trajectory(&gt)).map_err(|e| e.to_string())?;
        recover = recover
            .max((a.rot.matrix() - rot.inverse().matrix()).amax())
            .max((a.trans + rot.inverse() * trans).amax());

        let noisy: Vec<Vec3> = gt.iter().map(|p| p + in_ball(&mut rng, 0.3)).collect();
        let moved: Vec<Vec3> = noisy.iter().map(|p| rot * p + trans).collect();
        let truth = points_to_trajectory(&gt);
        let (_, r1) = evaluate(&points_to_trajectory(&noisy), &truth).map_err(|e| e.to_string())?;
        let (_, r2) = evaluate(&points_to_trajectory(&moved), &truth).map_err(|e| e.to_string())?;
        invariance = invariance
            .max((r1.rmse - r2.rmse).abs())
            .max((r1.per_axis_rmse - r2.per_axis_rmse).amax());
        for ((_, e1), (_, e2)) in r1.per_sample_errors.iter().zip(&r2.per_sample_errors) {
            invariance = invariance.max((e1 - e2).amax());
        }
    }
    let base = [Vec3::zeros(), Vec3::new(1.0, 0.2, -0.3), Vec3::new(2.0, 1.5, 0.1), Vec3::new(0.5, 3.0, 1.0)];
    let shifted: Vec<Vec3> = base.iter().map(|p| p + Vec3::new(3.0, 4.0, 0.0)).collect();
    let offset = compute_errors(&points_to_trajectory(&shifted), &points_to_trajectory(&base), &AlignmentResult::identity())
        .map_err(|e| e.to_string())?
        .rmse;
    check(
        recover <= 1e-10 && invariance <= 1e-9 && (offset - 5.0).abs() <= 1e-12,
        format!("recovery {recover:.1e} (≤ 1e-10), invariance {invariance:.1e} (≤ 1e-9), offset rmse {offset}"),
    )
}

fn main() -> ExitCode {
    let criteria: [Criterion; 8] = [
        ("closed-form exponential vs series", closed_form_vs_series),
        ("rotation identity suite", identity_suite),
        ("compact/lifted and batch/iterated equivalence", equivalence),
        ("exactness and error ordering", exactness_and_ordering),
        ("fairness converse", fairness_converse),
        ("reference improvement percentages", reference_percentages),
        ("EuRoC-format regression", euroc_regression),
        ("evaluation suite", evaluation_suite),
    ];
    let mut failed = 0;
    for (k, (name, run)) in criteria.iter().enumerate() {
        let outcome = catch_unwind(AssertUnwindSafe(run)).unwrap_or_else(|_| Err("panicked".into()));
        match outcome {
            Ok(detail) => println!("criterion {}: PASS  {name}: {detail}", k + 1),
            Err(detail) => {
                failed += 1;
                println!("criterion {}: FAIL  {name}: {detail}", k + 1);
            }
        }
    }
    println!("acceptance: {} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
