use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use ema_core::config::REFERENCE_STEP;
use ema_core::io;
use ema_core::model;

fn ema(dir: &Path, config: Option<&Path>, args: &[&str]) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_ema"));
    cmd.env_remove("EMA_CONFIG").arg("--out-dir").arg(dir).arg("--quiet");
    if let Some(c) = config {
        cmd.arg("--config").arg(c);
    }
    cmd.args(args).output().expect("binary runs")
}

fn write_config(dir: &Path, name: &str, text: &str) -> PathBuf {
    let p = dir.join(name);
    fs::write(&p, text).unwrap();
    p
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exited normally")
}

#[test]
fn check_gains_reference_is_certified() {
    let dir = tempfile::tempdir().unwrap();
    let out = Command::new(env!("CARGO_BIN_EXE_ema"))
        .env_remove("EMA_CONFIG")
        .args(["--out-dir", dir.path().to_str().unwrap(), "check-gains"])
        .output()
        .unwrap();
    assert_eq!(code(&out), 0);
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("a = -799.0"), "{text}");
    assert!(text.contains("b = -40.0"));
    assert!(text.contains("determinant = 40799.75"));
    assert!(text.contains("certified = true"));
    assert!(text.contains("delta = 3.6"));
}

#[test]
fn check_gains_without_velocity_gain_is_uncertified() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "c.toml", &REFERENCE_STEP.replace("alpha2 = 20000.0", "alpha2 = 0.0"));
    let out = Command::new(env!("CARGO_BIN_EXE_ema"))
        .args(["--config", cfg.to_str().unwrap(), "check-gains"])
        .output()
        .unwrap();
    assert_eq!(code(&out), 3);
    assert!(String::from_utf8(out.stdout).unwrap().contains("certified = false"));
}

#[test]
fn corrupted_config_exits_2_with_line() {
    let dir = tempfile::tempdir().unwrap();
    let cfg =
        write_config(dir.path(), "bad.toml", &REFERENCE_STEP.replace("turns = 70", "turns = \"seventy\""));
    let out = ema(dir.path(), Some(&cfg), &["simulate"]);
    assert_eq!(code(&out), 2);
    let err = String::from_utf8(out.stderr).unwrap();
    assert!(err.contains("line 10"), "{err}");
}

#[test]
fn missing_config_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let out = ema(dir.path(), Some(&dir.path().join("nope.toml")), &["bounds"]);
    assert_eq!(code(&out), 2);
}

#[test]
fn zero_duration_gives_empty_trajectory() {
    let dir = tempfile::tempdir().unwrap();
    let out = ema(dir.path(), None, &["simulate", "--duration", "0"]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let csv = fs::read_to_string(dir.path().join("trajectory.csv")).unwrap();
    assert_eq!(csv, format!("{}\n", io::TRAJECTORY_HEADER));
    let report = fs::read_to_string(dir.path().join("report.toml")).unwrap();
    assert!(report.contains("settled = false"), "{report}");
}

#[test]
fn uncertified_needs_force() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "c.toml", &REFERENCE_STEP.replace("alpha2 = 20000.0", "alpha2 = 0.0"));
    assert_eq!(code(&ema(dir.path(), Some(&cfg), &["simulate", "--duration", "0.001"])), 3);
    let out = ema(dir.path(), Some(&cfg), &["--force", "simulate", "--duration", "0.001"]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn divergence_exits_4() {
    let dir = tempfile::tempdir().unwrap();
    let text = REFERENCE_STEP
        .replace("integrator = \"rk4\"", "integrator = \"euler\"")
        .replace("dt = 1e-6", "dt = 1e-4");
    let cfg = write_config(dir.path(), "c.toml", &text);
    let out = ema(dir.path(), Some(&cfg), &["simulate", "--duration", "0.05"]);
    assert_eq!(code(&out), 4);
    assert!(String::from_utf8(out.stderr).unwrap().contains("diverged"));
}

#[test]
fn config_from_environment() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "c.toml",
        &REFERENCE_STEP.replace("bounds = \"bounds.csv\"", "bounds = \"env.csv\""),
    );
    let out = Command::new(env!("CARGO_BIN_EXE_ema"))
        .env("EMA_CONFIG", &cfg)
        .args(["--quiet", "--out-dir", dir.path().to_str().unwrap(), "bounds", "--points", "3"])
        .output()
        .unwrap();
    assert_eq!(code(&out), 0);
    assert!(dir.path().join("env.csv").exists());
}

#[test]
fn trajectory_csv_round_trips_and_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a");
    let b = dir.path().join("b");
    for d in [&a, &b] {
        assert_eq!(code(&ema(d, None, &["simulate", "--duration", "0.02"])), 0);
    }
    let bytes = fs::read(a.join("trajectory.csv")).unwrap();
    assert_eq!(bytes, fs::read(b.join("trajectory.csv")).unwrap());
    let text = String::from_utf8(bytes.clone()).unwrap();
    assert_eq!(text.lines().next(), Some(io::TRAJECTORY_HEADER));
    let recs = io::read_trajectory(bytes.as_slice()).unwrap();
    assert_eq!(recs.len(), 200);
    let mut again = Vec::new();
    io::write_trajectory(
        &mut again,
        &ema_core::sim::Trajectory { records: recs.clone(), ..Default::default() },
    )
    .unwrap();
    let recs2 = io::read_trajectory(again.as_slice()).unwrap();
    for (r, s) in recs.iter().zip(&recs2) {
        for (x, y) in [(r.x1, s.x1), (r.x3, s.x3), (r.u, s.u), (r.v, s.v), (r.alpha3, s.alpha3)] {
            assert!(x == y || ((x - y) / y).abs() <= 1e-12);
        }
    }
}

#[test]
fn bounds_table_brackets_the_nominal_plant() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(code(&ema(dir.path(), None, &["bounds"])), 0);
    let rows = io::read_bounds(fs::File::open(dir.path().join("bounds.csv")).unwrap()).unwrap();
    assert_eq!(rows.len(), 201);
    assert_eq!((rows[0].x1, rows[0].rho_lo, rows[0].rho_hi), (0.0, 630.0, 630.0));
    let plant = ema_core::config::ConfigFile::reference_step().scenario().unwrap().plant;
    for r in &rows {
        if r.x1 > 0.0 {
            assert!(r.rho_lo < r.rho_hi && r.l_lo < r.l_hi && r.mu_lo < r.mu_hi);
        }
        assert!(r.rho_lo <= model::reluctance(r.x1, &plant) && model::reluctance(r.x1, &plant) <= r.rho_hi);
        let l = model::inductance(r.x1, &plant);
        assert!(r.l_lo <= l && l <= r.l_hi);
        let mu = model::mu_coefficient(r.x1, &plant);
        assert!(r.mu_lo <= mu && mu <= r.mu_hi);
    }
}

#[test]
fn sweep_of_initial_positions_is_bounded_and_resumable() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(code(&ema(dir.path(), None, &["sweep"])), 0);
    let path = dir.path().join("sweep.csv");
    let first = fs::read(&path).unwrap();
    let rows = io::read_sweep(first.as_slice()).unwrap();
    assert_eq!(rows.len(), 5);
    for (i, r) in rows.iter().enumerate() {
        assert_eq!(r.index, i);
        assert_eq!(r.status, "ok");
        assert_eq!(r.ultimate_bound_ok, Some(true));
    }

    // Rerun from scratch on one thread: same bytes.
    let other = dir.path().join("fresh");
    assert_eq!(code(&ema(&other, None, &["sweep", "--jobs", "1"])), 0);
    assert_eq!(fs::read(other.join("sweep.csv")).unwrap(), first);

    // Forget one row and resume.
    let rows_dir = dir.path().join("sweep.csv.rows");
    fs::remove_file(rows_dir.join("row-000002.done")).unwrap();
    fs::write(rows_dir.join("row-000002.csv"), "garbage\n").unwrap();
    assert_eq!(code(&ema(dir.path(), None, &["sweep"])), 0);
    assert_eq!(fs::read(&path).unwrap(), first);
}

#[test]
fn empty_sweep_is_header_only() {
    let dir = tempfile::tempdir().unwrap();
    let text = REFERENCE_STEP
        .replace("initial_positions = [0.0005, 0.00075, 0.001, 0.00125, 0.0015]", "initial_positions = []");
    let cfg = write_config(dir.path(), "c.toml", &text);
    assert_eq!(code(&ema(dir.path(), Some(&cfg), &["sweep"])), 0);
    let csv = fs::read_to_string(dir.path().join("sweep.csv")).unwrap();
    assert_eq!(csv, format!("{}\n", io::SWEEP_HEADER));
}

#[test]
fn sweep_records_failures_per_row() {
    let dir = tempfile::tempdir().unwrap();
    let text = REFERENCE_STEP
        .replace(
            "initial_positions = [0.0005, 0.00075, 0.001, 0.00125, 0.0015]",
            "alpha2 = [0.0, 20000.0]\ninitial_positions = [0.001]",
        )
        .replace("duration = 0.5", "duration = 0.001");
    let cfg = write_config(dir.path(), "c.toml", &text);
    assert_eq!(code(&ema(dir.path(), Some(&cfg), &["sweep"])), 0);
    let rows = io::read_sweep(fs::File::open(dir.path().join("sweep.csv")).unwrap()).unwrap();
    let status: Vec<_> = rows.iter().map(|r| r.status.as_str()).collect();
    assert_eq!(status, ["uncertified", "ok"]);
}
