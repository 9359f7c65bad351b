//! Writes the EuRoC-layout regression fixture used by the CLI tests:
//! `imu.csv` (200 Hz, 10 s) and `groundtruth.csv` for an oscillating,
//! tumbling flight with smoothly varying body rates and thrust.
//!
//! The IMU reports instantaneous (noisy) values at each stamp; truth comes
//! from midpoint sub-stepping of the continuous signals, so neither
//! integration model is exact on this data.
//!
//!     cargo run -p switched-imu-cli --example euroc_fixture -- <out-dir>

use std::path::PathBuf;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use switched_imu::io::{write_groundtruth, write_imu_log, Trajectory};
use switched_imu::preint::{step_proposed, Renormalizer};
use switched_imu::{ImuSample, NavState, Timestamp, Vec3, GRAVITY};

const START_NS: i64 = 1_403_636_579_758_555_392;
const PERIOD_NS: i64 = 5_000_000;
const COUNT: usize = 2001;
const SUBSTEPS: i64 = 100;

fn body_rate(t: f64) -> Vec3 {
    Vec3::new(
        2.0 * (6.0 * t).sin(),
        1.8 * (5.0 * t + 0.7).sin(),
        0.6 + 0.4 * (1.5 * t).sin(),
    )
}

fn specific_force(t: f64) -> Vec3 {
    Vec3::new(
        0.3 * (0.7 * t).sin(),
        0.2 * (1.1 * t).cos(),
        9.81 + 0.5 * (0.6 * t).sin(),
    )
}

fn main() {
    let dir = PathBuf::from(std::env::args().nth(1).expect("usage: euroc_fixture <out-dir>"));
    std::fs::create_dir_all(&dir).unwrap();

    let mut rng = ChaCha8Rng::seed_from_u64(2014);
    let gyro_noise = Normal::new(0.0, 2.4e-3).unwrap();
    let accel_noise = Normal::new(0.0, 2.8e-2).unwrap();
    let noise = |d: &Normal<f64>, rng: &mut ChaCha8Rng| Vec3::from_fn(|_, _| d.sample(rng));

    let h = (PERIOD_NS / SUBSTEPS) as f64 * 1e-9;
    let mut x = NavState::at_rest(Timestamp::from_nanos(START_NS));
    let mut renorm = Renormalizer::default();
    let mut samples = Vec::with_capacity(COUNT);
    let mut truth = Vec::with_capacity(COUNT);
    for k in 0..COUNT {
        let t = k as f64 * PERIOD_NS as f64 * 1e-9;
        truth.push(x);
        samples.push(ImuSample {
            t: x.t,
            w: body_rate(t) + noise(&gyro_noise, &mut rng),
            a: specific_force(t) + noise(&accel_noise, &mut rng),
        });
        if k + 1 == COUNT {
            break;
        }
        for m in 0..SUBSTEPS {
            let mid = t + (m as f64 + 0.5) * h;
            x = step_proposed(&x, &specific_force(mid), &body_rate(mid), h, &GRAVITY).unwrap();
            x.rot = renorm.apply(x.rot);
        }
    }

    write_imu_log(&dir.join("imu.csv"), &samples).unwrap();
    write_groundtruth(&dir.join("groundtruth.csv"), &Trajectory::new(truth).unwrap()).unwrap();
}
