use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use switched_imu::eval::{evaluate as align_and_score, format_error_rows, format_summary};
use switched_imu::io::{read_imu_log, read_trajectory, read_truth, write_atomic, write_imu_log, write_trajectory};
use switched_imu::pipeline::{compare as compare_models, windowed_estimate, WindowConfig};
use switched_imu::sim::{generate, ScenarioSpec};

use crate::config::RunConfig;

fn out_dir(cfg: &RunConfig) -> Result<&PathBuf> {
    let dir = RunConfig::require(&cfg.out, "--out")?;
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    Ok(dir)
}

fn write(dir: &Path, name: &str, text: &str) -> Result<()> {
    write_atomic(&dir.join(name), text)?;
    Ok(())
}

fn window_config(cfg: &RunConfig) -> WindowConfig {
    WindowConfig {
        keyframe_hz: cfg.keyframe_hz(),
        reset_every: cfg.reset_every,
        gravity: cfg.gravity_vec(),
    }
}

pub fn simulate(cfg: &RunConfig) -> Result<()> {
    let path = RunConfig::require(&cfg.scenario, "--scenario")?;
    let mut spec = ScenarioSpec::from_file(path)?;
    if let Some(rate) = cfg.rate_hz {
        spec.imu_rate = rate;
    }
    if cfg.gravity.is_some() {
        spec.gravity = cfg.gravity_vec();
    }
    let sim = generate(&spec, cfg.seed.unwrap_or(0))?;
    let dir = out_dir(cfg)?;
    write_imu_log(&dir.join("imu.csv"), &sim.samples)?;
    write_trajectory(&dir.join("truth.csv"), &sim.truth)?;
    println!("samples = {}", sim.samples.len());
    println!("states = {}", sim.truth.len());
    Ok(())
}

pub fn integrate(cfg: &RunConfig) -> Result<()> {
    let model = *RunConfig::require(&cfg.model, "--model")?;
    let samples = read_imu_log(RunConfig::require(&cfg.imu, "--imu")?)?;
    let truth = cfg.truth.as_deref().map(read_truth).transpose()?;
    let est = windowed_estimate(model, &samples, truth.as_ref(), &window_config(cfg))?;
    let dir = out_dir(cfg)?;
    write_trajectory(&dir.join("trajectory.csv"), &est.trajectory)?;
    println!("model = {model}");
    println!("samples = {}", samples.len());
    println!("states = {}", est.trajectory.len());
    println!("skipped_windows = {}", est.skipped);
    Ok(())
}

pub fn compare(cfg: &RunConfig) -> Result<()> {
    let samples = read_imu_log(RunConfig::require(&cfg.imu, "--imu")?)?;
    let truth = read_truth(RunConfig::require(&cfg.truth, "--truth")?)?;
    let report = compare_models(&samples, &truth, &window_config(cfg))?;

    let mut rows = String::from("# start, classical_rmse, proposed_rmse\n");
    for w in &report.windows {
        let _ = writeln!(rows, "{}, {}, {}", w.start, w.classical_rmse, w.proposed_rmse);
    }
    let mut summary = format_summary(&report.classical, "classical.");
    summary += &format_summary(&report.proposed, "proposed.");
    match report.improvement {
        Some(p) => {
            let _ = writeln!(summary, "improvement_percent = {p}");
        }
        None => summary.push_str("improvement_percent = undefined\n"),
    }
    let _ = writeln!(summary, "windows = {}", report.windows.len());
    let _ = writeln!(summary, "skipped_windows = {}", report.skipped_windows);
    let _ = writeln!(summary, "median_window_rmse.classical = {}", report.median_classical());
    let _ = writeln!(summary, "median_window_rmse.proposed = {}", report.median_proposed());
    let _ = writeln!(summary, "proposed_wins = {}", report.proposed_wins());

    let dir = out_dir(cfg)?;
    write(dir, "classical_errors.csv", &format_error_rows(&report.classical))?;
    write(dir, "proposed_errors.csv", &format_error_rows(&report.proposed))?;
    write(dir, "windows.csv", &rows)?;
    write(dir, "summary.txt", &summary)?;
    print!("{summary}");
    Ok(())
}

pub fn evaluate(cfg: &RunConfig) -> Result<()> {
    let estimate = read_trajectory(RunConfig::require(&cfg.estimate, "--estimate")?)?;
    let truth = read_truth(RunConfig::require(&cfg.truth, "--truth")?)?;
    let (alignment, report) = align_and_score(&estimate, &truth)?;

    let r = alignment.rot.matrix();
    let mut summary = String::new();
    let _ = writeln!(
        summary,
        "alignment.rot = {}",
        r.transpose().iter().map(f64::to_string).collect::<Vec<_>>().join(", ")
    );
    let t = alignment.trans;
    let _ = writeln!(summary, "alignment.trans = {}, {}, {}", t.x, t.y, t.z);
    summary += &format_summary(&report, "");

    let dir = out_dir(cfg)?;
    write(dir, "errors.csv", &format_error_rows(&report))?;
    write(dir, "summary.txt", &summary)?;
    print!("{summary}");
    Ok(())
}
