//! `ema`: run, certify and sweep the actuator controller from a config file.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Parser, Subcommand};
use rayon::prelude::*;
use serde::Serialize;

use ema_core::analysis::{self, RunReport, TheoremCheck};
use ema_core::config::{ConfigFile, SweepPoint};
use ema_core::controller::GainCertificate;
use ema_core::io::{self, SweepRow};
use ema_core::model::FringingModel;
use ema_core::sim;
use ema_core::Error;

#[derive(Parser, Debug)]
#[command(name = "ema", version, about = "Backstepping sliding-mode control of an electromagnetic actuator")]
struct Cli {
    /// Experiment config (TOML). Defaults to the bundled 3 mm step.
    #[arg(long, global = true, env = "EMA_CONFIG")]
    config: Option<PathBuf>,
    /// Directory for output files.
    #[arg(long, global = true, default_value = ".")]
    out_dir: PathBuf,
    /// Simulate even when the gains are not certified.
    #[arg(long, global = true)]
    force: bool,
    /// Do not print summaries.
    #[arg(long, global = true)]
    quiet: bool,
    #[command(subcommand)]
    cmd: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Run one scenario; write the trajectory CSV and a report.
    Simulate {
        /// Override the simulated time (s).
        #[arg(long)]
        duration: Option<f64>,
        /// Override the integration step (s).
        #[arg(long)]
        dt: Option<f64>,
    },
    /// Print the gain certificate.
    CheckGains {
        /// Largest reference magnitude (m). Defaults to the scenario's.
        #[arg(long)]
        y_r_max: Option<f64>,
    },
    /// Write the inductance, reluctance and force-coefficient envelopes.
    Bounds {
        /// Number of evenly spaced airgaps over the stroke.
        #[arg(long)]
        points: Option<usize>,
    },
    /// Run every combination of the [sweep] section; resumable.
    Sweep {
        /// Worker threads (default: all cores).
        #[arg(long)]
        jobs: Option<usize>,
    },
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Config(_) | Error::Params(_) | Error::Input(_) => 2,
        Error::Uncertified => 3,
        Error::Divergence { .. } => 4,
        Error::Io(_) | Error::Csv(_) => 1,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(&cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}

fn load_config(cli: &Cli) -> ema_core::Result<ConfigFile> {
    match &cli.config {
        Some(p) => ConfigFile::load(p),
        None => Ok(ConfigFile::reference_step()),
    }
}

fn dispatch(cli: &Cli) -> ema_core::Result<u8> {
    let cfg = load_config(cli)?;
    fs::create_dir_all(&cli.out_dir)?;
    match cli.cmd {
        Command::Simulate { duration, dt } => simulate(cli, &cfg, duration, dt),
        Command::CheckGains { y_r_max } => check_gains(cli, &cfg, y_r_max),
        Command::Bounds { points } => bounds(cli, &cfg, points),
        Command::Sweep { jobs } => sweep(cli, &cfg, jobs),
    }
}

#[derive(Serialize)]
struct SimulateSummary {
    report: RunReport,
    theorem: TheoremCheck,
}

fn simulate(cli: &Cli, cfg: &ConfigFile, duration: Option<f64>, dt: Option<f64>) -> ema_core::Result<u8> {
    let mut sc = cfg.scenario()?;
    if let Some(d) = duration {
        sc.duration = d;
    }
    if let Some(h) = dt {
        sc.dt = h;
    }
    sc.force = cli.force;
    let start = Instant::now();
    let traj = sim::run(&sc)?;
    let elapsed = start.elapsed();

    let mut csv = Vec::new();
    io::write_trajectory(&mut csv, &traj)?;
    io::write_atomic(&cli.out_dir.join(&cfg.outputs.trajectory), &csv)?;

    let summary = SimulateSummary {
        report: analysis::run_report(&traj, &sc),
        theorem: analysis::verify_theorem_bounds(&traj, &sc.certificate(), &sc),
    };
    let text = toml::to_string(&summary).expect("report serializes");
    io::write_atomic(&cli.out_dir.join(&cfg.outputs.report), text.as_bytes())?;
    if !cli.quiet {
        print!("{text}");
        eprintln!("wall time: {:.3} s", elapsed.as_secs_f64());
    }
    Ok(0)
}

#[derive(Serialize)]
struct CertificateSummary {
    y_r_max: f64,
    certified: bool,
    determinant: f64,
    certificate: GainCertificate,
}

fn check_gains(cli: &Cli, cfg: &ConfigFile, y_r_max: Option<f64>) -> ema_core::Result<u8> {
    let sc = cfg.scenario()?;
    let y = y_r_max.unwrap_or_else(|| sc.reference.max_abs());
    if !(y.is_finite() && y >= 0.0) {
        return Err(Error::Params(format!("y_r_max must be >= 0, got {y}")));
    }
    let cert = ema_core::controller::certify_gains(&sc.controller.gains, &sc.plant, y);
    let summary = CertificateSummary {
        y_r_max: y,
        certified: cert.certified(),
        determinant: cert.determinant(),
        certificate: cert.clone(),
    };
    if !cli.quiet {
        print!("{}", toml::to_string(&summary).expect("certificate serializes"));
    }
    Ok(if cert.certified() { 0 } else { 3 })
}

fn bounds(cli: &Cli, cfg: &ConfigFile, points: Option<usize>) -> ema_core::Result<u8> {
    let plant = cfg.plant()?;
    let n = points.unwrap_or(cfg.outputs.bounds_points);
    let rows = io::bounds_table(&plant, n);
    let mut csv = Vec::new();
    io::write_bounds(&mut csv, &rows)?;
    let path = cli.out_dir.join(&cfg.outputs.bounds);
    io::write_atomic(&path, &csv)?;
    if !cli.quiet {
        println!("wrote {} rows to {}", rows.len(), path.display());
    }
    Ok(0)
}

fn run_point(cfg: &ConfigFile, pt: &SweepPoint, reals: &[FringingModel], force: bool) -> SweepRow {
    let sc = match cfg.sweep_scenario(pt, reals) {
        Ok(mut sc) => {
            sc.force = force;
            sc
        }
        Err(_) => return SweepRow::failed(pt, "error"),
    };
    match sim::run(&sc) {
        Ok(traj) => SweepRow::from_report(pt, &analysis::run_report(&traj, &sc)),
        Err(Error::Uncertified) => SweepRow::failed(pt, "uncertified"),
        Err(Error::Divergence { .. }) => SweepRow::failed(pt, "divergence"),
        Err(_) => SweepRow::failed(pt, "error"),
    }
}

/// Per-row results live in `<out>/<sweep>.rows/`; a row counts as finished
/// once its `.done` marker exists. Rows from a different config are dropped.
fn prepare_rows_dir(dir: &Path, fingerprint: &str) -> ema_core::Result<()> {
    let stamp = dir.join("config.toml");
    if dir.exists() && fs::read_to_string(&stamp).ok().as_deref() != Some(fingerprint) {
        fs::remove_dir_all(dir)?;
    }
    fs::create_dir_all(dir)?;
    io::write_atomic(&stamp, fingerprint.as_bytes())
}

fn sweep(cli: &Cli, cfg: &ConfigFile, jobs: Option<usize>) -> ema_core::Result<u8> {
    let points = cfg.sweep_points()?;
    let reals = cfg.realizations()?;
    let out = cli.out_dir.join(&cfg.outputs.sweep);
    let mut rows_dir = out.as_os_str().to_owned();
    rows_dir.push(".rows");
    let rows_dir = PathBuf::from(rows_dir);
    prepare_rows_dir(&rows_dir, &format!("force = {}\n{}", cli.force, cfg.to_toml()))?;

    let row_path = |i: usize| rows_dir.join(format!("row-{i:06}.csv"));
    let done_path = |i: usize| rows_dir.join(format!("row-{i:06}.done"));
    let work = || -> ema_core::Result<Vec<String>> {
        points
            .par_iter()
            .map(|pt| {
                let (row, done) = (row_path(pt.index), done_path(pt.index));
                if done.exists() {
                    if let Ok(line) = fs::read_to_string(&row) {
                        return Ok(line);
                    }
                }
                let line = run_point(cfg, pt, &reals, cli.force).to_line()?;
                io::write_atomic(&row, line.as_bytes())?;
                fs::write(&done, b"")?;
                Ok(line)
            })
            .collect()
    };
    let lines = match jobs {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n.max(1))
            .build()
            .map_err(|e| Error::Params(e.to_string()))?
            .install(work)?,
        None => work()?,
    };

    let mut text = format!("{}\n", io::SWEEP_HEADER);
    for l in &lines {
        text.push_str(l);
    }
    io::write_atomic(&out, text.as_bytes())?;
    if !cli.quiet {
        let ok = lines.iter().filter(|l| l.split(',').nth(5) == Some("ok")).count();
        println!("wrote {} rows ({ok} ok) to {}", lines.len(), out.display());
    }
    Ok(0)
}
