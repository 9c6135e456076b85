//! Step-response metrics and post-hoc checks of the closed-loop guarantees.

use serde::{Deserialize, Serialize};

use crate::controller::{virtual_current_rate, ControllerConfig, GainCertificate};
use crate::model::{self, PlantParams};
use crate::sim::{Record, Scenario, Trajectory};

/// Default settling band, as a fraction of the final reference.
pub const SETTLING_BAND: f64 = 0.02;
/// `S_tol` as a fraction of the peak virtual current.
pub const SURFACE_TOL_FRACTION: f64 = 0.01;
/// `|S| < S_tol` must hold this long for the surface to count as reached (s).
pub const REACHING_HOLD: f64 = 1e-3;
/// Relative slack on the reaching and decrease inequalities.
pub const INEQUALITY_SLACK: f64 = 0.05;

/// First time after which `x1` stays within `band · |y_r|` of the final
/// reference. `None` when the last sample is still outside the band or the
/// trajectory is empty.
pub fn settling_time(traj: &Trajectory, band: f64) -> Option<f64> {
    let last = traj.records.last()?;
    let target = last.y_r();
    let tol = band * target.abs();
    let outside = |r: &Record| (r.x1 - target).abs() > tol;
    match traj.records.iter().rposition(outside) {
        None => Some(traj.records[0].t),
        Some(i) if i + 1 < traj.records.len() => Some(traj.records[i + 1].t),
        Some(_) => None,
    }
}

/// Peak excursion past the final reference, relative to the step size.
pub fn overshoot(traj: &Trajectory) -> f64 {
    let (Some(first), Some(last)) = (traj.records.first(), traj.records.last()) else {
        return 0.0;
    };
    let target = last.y_r();
    let step = target - first.x1;
    if step == 0.0 {
        return 0.0;
    }
    let peak = traj.records.iter().map(|r| (r.x1 - target) * step.signum()).fold(f64::NEG_INFINITY, f64::max);
    (peak / step.abs()).max(0.0)
}

/// `|x1 − y_r| / |y_r|` at the last sample.
pub fn steady_state_error(traj: &Trajectory) -> Option<f64> {
    let last = traj.records.last()?;
    Some(last.z1.abs() / last.y_r().abs())
}

pub fn max_abs_u(traj: &Trajectory) -> f64 {
    traj.records.iter().map(|r| r.u.abs()).fold(0.0, f64::max)
}

pub fn max_alpha3(traj: &Trajectory) -> f64 {
    traj.records.iter().map(|r| r.alpha3).fold(0.0, f64::max)
}

/// `S_tol`: a fixed fraction of the peak `|x3d|` over the run.
pub fn surface_tolerance(traj: &Trajectory) -> f64 {
    SURFACE_TOL_FRACTION * traj.records.iter().map(|r| r.x3d.abs()).fold(0.0, f64::max)
}

/// First sample time from which `|S| < s_tol` holds for [`REACHING_HOLD`].
pub fn reaching_time(traj: &Trajectory, s_tol: f64) -> Option<f64> {
    let recs = &traj.records;
    let hold = (REACHING_HOLD / traj.sample_period()).round().max(1.0) as usize;
    let mut run = 0usize;
    for (i, r) in recs.iter().enumerate() {
        if r.s.abs() < s_tol {
            run += 1;
            if run > hold {
                return Some(recs[i - hold].t);
            }
        } else {
            run = 0;
        }
    }
    None
}

/// `d(½S²)/dt` at a logged sample, using the true plant for both `ẋ3` and
/// the exact `ẋ3d`.
pub fn surface_energy_rate(r: &Record, cfg: &ControllerConfig, plant: &PlantParams) -> f64 {
    let s = r.state();
    let rate = model::vector_field(&s, r.u, plant);
    let x3d_dot = virtual_current_rate(&s, &rate, r.y_r(), 0.0, cfg, plant);
    r.s * (rate.x3 - x3d_dot)
}

/// Results of checking the reaching law, the ultimate bound and the
/// Lyapunov decrease along a trajectory.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TheoremCheck {
    pub s_tol: f64,
    pub reaching_time: Option<f64>,
    /// `|S| < S_tol` at every sample after `reaching_time`.
    pub stays_on_surface: bool,
    /// Samples with `|S| > S_tol`.
    pub reaching_samples: usize,
    /// Of those, samples where `d(½S²)/dt ≤ −(1 − slack) ε1 |S|`.
    pub reaching_satisfied: usize,
    pub settling_time: Option<f64>,
    pub radius: f64,
    pub radius_literal: f64,
    /// Largest `‖(z1, z2)‖` after settling.
    pub max_norm_after_settling: Option<f64>,
    pub ultimate_bound_ok: bool,
    pub ultimate_bound_ok_literal: bool,
    /// Samples outside the disc where the decrease condition was tested.
    pub lyapunov_checked: usize,
    pub lyapunov_violations: usize,
    pub lyapunov_violations_literal: usize,
}

impl TheoremCheck {
    pub fn reaching_fraction(&self) -> f64 {
        if self.reaching_samples == 0 {
            1.0
        } else {
            self.reaching_satisfied as f64 / self.reaching_samples as f64
        }
    }
}

/// Count samples where the numerical `V̇1` exceeds `−(1−θ) α ‖z‖²` while
/// `‖z‖ > radius`, and how many were tested.
fn count_decrease_violations(traj: &Trajectory, alpha: f64, theta: f64, radius: f64) -> (usize, usize) {
    let recs = &traj.records;
    let h = traj.sample_period();
    let (mut checked, mut bad) = (0, 0);
    for i in 1..recs.len().saturating_sub(1) {
        let norm = recs[i].z1.hypot(recs[i].z2);
        if norm <= radius {
            continue;
        }
        checked += 1;
        let v_dot = (recs[i + 1].v1 - recs[i - 1].v1) / (2.0 * h);
        let curvature = (recs[i + 1].v1 - 2.0 * recs[i].v1 + recs[i - 1].v1).abs() / (2.0 * h);
        let bound = -(1.0 - theta) * alpha * norm * norm;
        if v_dot > bound + INEQUALITY_SLACK * bound.abs() + curvature {
            bad += 1;
        }
    }
    (checked, bad)
}

pub fn verify_theorem_bounds(traj: &Trajectory, cert: &GainCertificate, scenario: &Scenario) -> TheoremCheck {
    let cfg = &scenario.controller;
    let plant = &scenario.plant;
    let eps1 = cfg.gains.epsilon1;
    let s_tol = surface_tolerance(traj);
    let reach = reaching_time(traj, s_tol);
    let stays_on_surface =
        reach.map(|tr| traj.records.iter().filter(|r| r.t >= tr).all(|r| r.s.abs() < s_tol)).unwrap_or(false);

    let (mut reaching_samples, mut reaching_satisfied) = (0, 0);
    for r in traj.records.iter().filter(|r| r.s.abs() > s_tol) {
        reaching_samples += 1;
        let rate = surface_energy_rate(r, cfg, plant);
        if rate <= -(1.0 - INEQUALITY_SLACK) * eps1 * r.s.abs() {
            reaching_satisfied += 1;
        }
    }

    let settle = settling_time(traj, SETTLING_BAND);
    let max_norm_after_settling = settle
        .map(|ts| traj.records.iter().filter(|r| r.t >= ts).map(|r| r.z1.hypot(r.z2)).fold(0.0, f64::max));
    let contained = |radius: f64| max_norm_after_settling.is_some_and(|m| m <= radius);

    let (lyapunov_checked, lyapunov_violations) =
        count_decrease_violations(traj, cert.alpha, cert.theta, cert.radius);
    let (_, lyapunov_violations_literal) =
        count_decrease_violations(traj, cert.alpha_literal, cert.theta, cert.radius_literal);

    TheoremCheck {
        s_tol,
        reaching_time: reach,
        stays_on_surface,
        reaching_samples,
        reaching_satisfied,
        settling_time: settle,
        radius: cert.radius,
        radius_literal: cert.radius_literal,
        max_norm_after_settling,
        ultimate_bound_ok: contained(cert.radius),
        ultimate_bound_ok_literal: contained(cert.radius_literal),
        lyapunov_checked,
        lyapunov_violations,
        lyapunov_violations_literal,
    }
}

/// Summary of one run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub samples: usize,
    pub duration: f64,
    pub settled: bool,
    pub settling_time: Option<f64>,
    pub overshoot: f64,
    pub steady_state_error: Option<f64>,
    pub max_abs_u: f64,
    pub reaching_time: Option<f64>,
    pub ultimate_bound_ok: bool,
    pub radius_used: f64,
    pub radius_literal: f64,
    pub lyapunov_violations: usize,
    pub reaching_law_fraction: f64,
}

pub fn run_report(traj: &Trajectory, scenario: &Scenario) -> RunReport {
    let cert = scenario.certificate();
    let check = verify_theorem_bounds(traj, &cert, scenario);
    RunReport {
        samples: traj.records.len(),
        duration: scenario.duration,
        settled: check.settling_time.is_some(),
        settling_time: check.settling_time,
        overshoot: overshoot(traj),
        steady_state_error: steady_state_error(traj),
        max_abs_u: max_abs_u(traj),
        reaching_time: check.reaching_time,
        ultimate_bound_ok: check.ultimate_bound_ok,
        radius_used: check.radius,
        radius_literal: check.radius_literal,
        lyapunov_violations: check.lyapunov_violations,
        reaching_law_fraction: check.reaching_fraction(),
    }
}

/// Sign changes of `u` in each full 1 ms window starting at `from`.
pub fn switches_per_ms(traj: &Trajectory, from: f64) -> Vec<u32> {
    let per_ms = (1e-3 / traj.sample_period()).round().max(1.0) as usize;
    let start = traj.records.partition_point(|r| r.t < from);
    traj.switches[start..].chunks_exact(per_ms).map(|c| c.iter().sum()).collect()
}

/// Consecutive sign flips among increments larger than `floor`.
pub fn increment_alternations(values: &[f64], floor: f64) -> usize {
    let mut last = 0.0f64;
    let mut flips = 0;
    for w in values.windows(2) {
        let d = w[1] - w[0];
        if d.abs() <= floor {
            continue;
        }
        if last != 0.0 && d.signum() != last {
            flips += 1;
        }
        last = d.signum();
    }
    flips
}

/// Resolution floor for increments, relative to a channel's full scale.
pub const RESOLUTION_FRACTION: f64 = 1e-4;

/// Largest number of significant increment sign flips of `channel` inside
/// any `window`-long block after `from`. Increments below
/// [`RESOLUTION_FRACTION`] of the channel's peak magnitude are ignored.
pub fn max_window_alternations(
    traj: &Trajectory,
    channel: impl Fn(&Record) -> f64,
    from: f64,
    window: f64,
) -> usize {
    let values: Vec<f64> = traj.records.iter().map(&channel).collect();
    let floor = RESOLUTION_FRACTION * values.iter().map(|v| v.abs()).fold(0.0, f64::max);
    let per_window = (window / traj.sample_period()).round().max(2.0) as usize;
    let start = traj.records.partition_point(|r| r.t < from);
    values[start..]
        .chunks(per_window)
        .filter(|c| c.len() == per_window)
        .map(|c| increment_alternations(c, floor))
        .max()
        .unwrap_or(0)
}
