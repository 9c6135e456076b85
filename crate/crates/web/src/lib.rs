//! Browser bindings: certify gains, tabulate envelopes and run the closed
//! loop. Each export returns JSON; the plain `*_json` functions behind them
//! are ordinary Rust and are tested natively.

use serde::Serialize;
use wasm_bindgen::prelude::*;

use ema_core::analysis::{self, RunReport};
use ema_core::config::ConfigFile;
use ema_core::controller::{certify_gains, ControllerGains, GainCertificate, MuArgument};
use ema_core::io::{bounds_table, BoundsRow};
use ema_core::model::{self, FringingModel, PlantParams};
use ema_core::sim::{self, ReferenceSchedule, Scenario};

/// Longest run the page may request (s).
pub const MAX_DURATION: f64 = 2.0;

fn plant_with_uncertainty(uncertainty: f64) -> Result<PlantParams, String> {
    let p = PlantParams::reference();
    let s = PlantParams::split_surface(p.rho_x, p.mu_0);
    let fringing = FringingModel::constant(s, s, uncertainty).map_err(|e| e.to_string())?;
    Ok(p.with_fringing(fringing))
}

#[derive(Serialize)]
struct Certificate {
    certified: bool,
    determinant: f64,
    #[serde(flatten)]
    cert: GainCertificate,
}

pub fn certify_json(alpha1: f64, alpha2: f64, y_r_max: f64) -> Result<String, String> {
    let g = ControllerGains { alpha1, alpha2, ..ControllerGains::reference() };
    g.validate().map_err(|e| e.to_string())?;
    let cert = certify_gains(&g, &PlantParams::reference(), y_r_max);
    let out = Certificate { certified: cert.certified(), determinant: cert.determinant(), cert };
    serde_json::to_string(&out).map_err(|e| e.to_string())
}

#[derive(Serialize)]
struct Envelopes {
    rows: Vec<BoundsRow>,
    /// Nominal inductance at each row's airgap.
    nominal_l: Vec<f64>,
    nominal_mu: Vec<f64>,
}

pub fn envelopes_json(uncertainty: f64, points: usize) -> Result<String, String> {
    if !(2..=10_000).contains(&points) {
        return Err(format!("points must lie in [2, 10000], got {points}"));
    }
    let p = plant_with_uncertainty(uncertainty)?;
    let rows = bounds_table(&p, points);
    let nominal_l = rows.iter().map(|r| model::inductance(r.x1, &p)).collect();
    let nominal_mu = rows.iter().map(|r| model::mu_coefficient(r.x1, &p)).collect();
    serde_json::to_string(&Envelopes { rows, nominal_l, nominal_mu }).map_err(|e| e.to_string())
}

#[derive(Serialize)]
struct Run {
    t: Vec<f64>,
    x1: Vec<f64>,
    x3: Vec<f64>,
    x3d: Vec<f64>,
    u: Vec<f64>,
    report: RunReport,
}

/// Step from the reference initial state to `y_r` with the bundled
/// configuration's plant and controller, overriding the main gains.
pub fn simulate_json(
    y_r: f64,
    alpha1: f64,
    alpha2: f64,
    epsilon1: f64,
    duration: f64,
    literal_mu: bool,
) -> Result<String, String> {
    if !(duration > 0.0 && duration <= MAX_DURATION) {
        return Err(format!("duration must lie in (0, {MAX_DURATION}] s"));
    }
    let mut sc: Scenario = ConfigFile::reference_step().scenario().map_err(|e| e.to_string())?;
    sc.reference = ReferenceSchedule::step(y_r);
    sc.duration = duration;
    sc.decimation = 500;
    sc.force = true;
    sc.controller.gains = ControllerGains { alpha1, alpha2, epsilon1, ..sc.controller.gains };
    sc.controller.mu_argument =
        if literal_mu { MuArgument::PositionPlusReference } else { MuArgument::Position };
    let traj = sim::run(&sc).map_err(|e| e.to_string())?;
    let col = |f: fn(&sim::Record) -> f64| traj.records.iter().map(f).collect::<Vec<_>>();
    let run = Run {
        t: col(|r| r.t),
        x1: col(|r| r.x1),
        x3: col(|r| r.x3),
        x3d: col(|r| r.x3d),
        u: col(|r| r.u),
        report: analysis::run_report(&traj, &sc),
    };
    serde_json::to_string(&run).map_err(|e| e.to_string())
}

#[wasm_bindgen]
pub fn certify(alpha1: f64, alpha2: f64, y_r_max: f64) -> Result<String, String> {
    certify_json(alpha1, alpha2, y_r_max)
}

#[wasm_bindgen]
pub fn envelopes(uncertainty: f64, points: usize) -> Result<String, String> {
    envelopes_json(uncertainty, points)
}

#[wasm_bindgen]
pub fn simulate(
    y_r: f64,
    alpha1: f64,
    alpha2: f64,
    epsilon1: f64,
    duration: f64,
    literal_mu: bool,
) -> Result<String, String> {
    simulate_json(y_r, alpha1, alpha2, epsilon1, duration, literal_mu)
}
