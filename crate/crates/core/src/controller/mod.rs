//! Backstepping outer loop plus sliding-mode current loop.
//!
//! The outer loop works in the error coordinates `z1 = x1 − y_r`,
//! `z2 = x2 + α1 z1` and asks for a coil current `x3d` with
//! `x3d² = −(2m/μ̲) α2 z2`. The inner loop switches the coil voltage on the
//! sign of `S = x3 − x3d` with a gain large enough to dominate every
//! uncertain term of `Ṡ`.

mod certificate;

use serde::{Deserialize, Serialize};

pub use certificate::{certify_gains, symmetric_eigenvalues, GainCertificate};

use crate::bounds;
use crate::model::{PlantParams, State, StateRate};
use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ControllerGains {
    /// Position error rate (s⁻¹).
    pub alpha1: f64,
    /// Velocity error gain (s⁻¹).
    pub alpha2: f64,
    /// Reaching margin of the switching gain (V).
    pub epsilon1: f64,
    /// Share of the decrease budget traded for the ultimate bound, in (0, 1).
    pub theta: f64,
}

impl ControllerGains {
    /// α1 = 10, α2 = 20000, ε1 = 10 V, θ = 0.9.
    pub fn reference() -> Self {
        Self { alpha1: 10.0, alpha2: 20000.0, epsilon1: 10.0, theta: 0.9 }
    }

    pub fn validate(&self) -> Result<()> {
        let ok = |v: f64| v.is_finite() && v > 0.0;
        let non_negative = self.alpha2.is_finite() && self.alpha2 >= 0.0;
        if !(ok(self.alpha1) && non_negative && ok(self.epsilon1)) {
            return Err(Error::Params(format!(
                "alpha1 and epsilon1 must be positive and alpha2 >= 0: {self:?}"
            )));
        }
        if !(self.theta > 0.0 && self.theta < 1.0) {
            return Err(Error::Params(format!("theta must lie in (0, 1), got {}", self.theta)));
        }
        Ok(())
    }
}

/// How `ẋ3d` is obtained for the switching gain.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case", deny_unknown_fields)]
pub enum DerivativeMode {
    /// Chain rule through the design model (μ replaced by μ̲, x3 by x3d).
    Analytic,
    /// Backward difference of successive `x3d` samples through a first-order
    /// low-pass of time constant `tau` (s).
    Filtered { tau: f64 },
}

/// Where the lower force coefficient in the virtual current is evaluated.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MuArgument {
    /// `μ̲(x1)`, the actual airgap.
    #[default]
    Position,
    /// `μ̲(x1 + y_r)`.
    PositionPlusReference,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ControllerConfig {
    pub gains: ControllerGains,
    pub derivative: DerivativeMode,
    pub mu_argument: MuArgument,
    /// Width of a saturation boundary layer replacing `sign(S)`; `None` keeps
    /// the discontinuous law.
    pub boundary_layer: Option<f64>,
}

impl ControllerConfig {
    pub fn new(gains: ControllerGains) -> Self {
        Self {
            gains,
            derivative: DerivativeMode::Analytic,
            mu_argument: MuArgument::Position,
            boundary_layer: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.gains.validate()?;
        if let DerivativeMode::Filtered { tau } = self.derivative {
            if !(tau.is_finite() && tau > 0.0) {
                return Err(Error::Params(format!("filter time constant must be positive, got {tau}")));
            }
        }
        if let Some(phi) = self.boundary_layer {
            if !(phi.is_finite() && phi > 0.0) {
                return Err(Error::Params(format!("boundary layer width must be positive, got {phi}")));
            }
        }
        Ok(())
    }
}

/// Outer-loop tracking error.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct TrackingError {
    /// `x1 − y_r` (m)
    pub z1: f64,
    /// `x2 + α1 z1` (m/s)
    pub z2: f64,
}

impl TrackingError {
    pub fn norm(&self) -> f64 {
        self.z1.hypot(self.z2)
    }

    /// `½ z1² + ½ z2²`
    pub fn lyapunov(&self) -> f64 {
        0.5 * (self.z1 * self.z1 + self.z2 * self.z2)
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ErrorCoords {
    pub z: TrackingError,
    /// Sliding variable `x3 − x3d` (A).
    pub s: f64,
    /// Virtual current (A).
    pub x3d: f64,
    /// Rate of the virtual current used in the switching gain (A/s).
    pub x3d_dot: f64,
}

pub fn error_coords(s: &State, y_r: f64, g: &ControllerGains) -> TrackingError {
    let z1 = s.x1 - y_r;
    TrackingError { z1, z2: s.x2 + g.alpha1 * z1 }
}

fn mu_argument(x1: f64, y_r: f64, cfg: &ControllerConfig) -> f64 {
    match cfg.mu_argument {
        MuArgument::Position => x1,
        MuArgument::PositionPlusReference => x1 + y_r,
    }
}

/// `−(2m/μ̲) α2 z2`, before clamping.
fn virtual_current_sq(z: &TrackingError, x1: f64, y_r: f64, cfg: &ControllerConfig, p: &PlantParams) -> f64 {
    let (mu_lo, _) = bounds::mu_bounds(mu_argument(x1, y_r, cfg), p);
    -2.0 * p.mass / mu_lo * cfg.gains.alpha2 * z.z2
}

/// Virtual current `x3d = √max(0, −(2m/μ̲) α2 z2)` (A).
///
/// Negative demands are clamped to zero: the magnet can only pull, and the
/// spring supplies the opposite action.
pub fn virtual_current(z: &TrackingError, x1: f64, y_r: f64, cfg: &ControllerConfig, p: &PlantParams) -> f64 {
    virtual_current_sq(z, x1, y_r, cfg, p).max(0.0).sqrt()
}

/// Exact `ẋ3d` along a given state rate (e.g. the true plant's, or the design
/// model's). Zero while clamped.
pub fn virtual_current_rate(
    s: &State,
    rate: &StateRate,
    y_r: f64,
    y_r_dot: f64,
    cfg: &ControllerConfig,
    p: &PlantParams,
) -> f64 {
    let g = &cfg.gains;
    let z = error_coords(s, y_r, g);
    let sq = virtual_current_sq(&z, s.x1, y_r, cfg, p);
    if sq <= 0.0 {
        return 0.0;
    }
    let x3d = sq.sqrt();
    let arg = mu_argument(s.x1, y_r, cfg);
    let (mu_lo, _) = bounds::mu_bounds(arg, p);
    let arg_dot = match cfg.mu_argument {
        MuArgument::Position => rate.x1,
        MuArgument::PositionPlusReference => rate.x1 + y_r_dot,
    };
    let mu_lo_dot = bounds::mu_lower_slope(arg, p) * arg_dot;
    let z1_dot = rate.x1 - y_r_dot;
    let z2_dot = rate.x2 + g.alpha1 * z1_dot;
    // d(x3d²)/dt = −2mα2 (ż2/μ̲ − z2 μ̲̇/μ̲²)
    let sq_dot = -2.0 * p.mass * g.alpha2 * (z2_dot / mu_lo - z.z2 * mu_lo_dot / (mu_lo * mu_lo));
    sq_dot / (2.0 * x3d)
}

/// `ẋ3d` from the design model: the velocity equation with `μ̲` in place of
/// `μ` and `x3d` in place of `x3`.
pub fn virtual_current_derivative(
    s: &State,
    y_r: f64,
    y_r_dot: f64,
    cfg: &ControllerConfig,
    p: &PlantParams,
) -> f64 {
    let z = error_coords(s, y_r, &cfg.gains);
    let x3d_sq = virtual_current_sq(&z, s.x1, y_r, cfg, p).max(0.0);
    let (mu_lo, _) = bounds::mu_bounds(mu_argument(s.x1, y_r, cfg), p);
    let rate = StateRate {
        x1: s.x2,
        x2: (0.5 * x3d_sq * mu_lo - p.friction * s.x2 - p.spring * s.x1) / p.mass,
        x3: 0.0,
    };
    virtual_current_rate(s, &rate, y_r, y_r_dot, cfg, p)
}

/// Switching gain
/// `α3 = R|x3d| + |(z2 − α1 z1)(S + x3d)| μ̄ + |ẋ3d| L̄ + ε`,
/// `ε = (2/m)|x3 + x3d| μ̄ + ε1`, with `μ̄`, `L̄` at the current airgap.
pub fn sliding_gain(s: &State, c: &ErrorCoords, g: &ControllerGains, p: &PlantParams) -> f64 {
    let (_, mu_hi) = bounds::mu_bounds(s.x1, p);
    let (_, l_hi) = bounds::inductance_bounds(s.x1, p);
    let eps = 2.0 / p.mass * (s.x3 + c.x3d).abs() * mu_hi + g.epsilon1;
    let velocity = c.z.z2 - g.alpha1 * c.z.z1;
    p.resistance * c.x3d.abs() + (velocity * (c.s + c.x3d)).abs() * mu_hi + c.x3d_dot.abs() * l_hi + eps
}

/// `−α3 sign(S)` with `sign(0) = 0`, or `−α3 sat(S/φ)` inside a boundary layer.
pub fn switching_law(surface: f64, alpha3: f64, boundary_layer: Option<f64>) -> f64 {
    match boundary_layer {
        Some(phi) => -alpha3 * (surface / phi).clamp(-1.0, 1.0),
        None if surface > 0.0 => -alpha3,
        None if surface < 0.0 => alpha3,
        None => 0.0,
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ControlOutput {
    /// Coil voltage (V).
    pub u: f64,
    pub alpha3: f64,
    pub coords: ErrorCoords,
}

/// Error coordinates for a given `ẋ3d`.
fn coords_with(s: &State, y_r: f64, x3d_dot: f64, cfg: &ControllerConfig, p: &PlantParams) -> ErrorCoords {
    let z = error_coords(s, y_r, &cfg.gains);
    let x3d = virtual_current(&z, s.x1, y_r, cfg, p);
    ErrorCoords { z, s: s.x3 - x3d, x3d, x3d_dot }
}

fn output(s: &State, coords: ErrorCoords, cfg: &ControllerConfig, p: &PlantParams) -> ControlOutput {
    let alpha3 = sliding_gain(s, &coords, &cfg.gains, p);
    ControlOutput { u: switching_law(coords.s, alpha3, cfg.boundary_layer), alpha3, coords }
}

/// Stateless evaluation with the analytic `ẋ3d` and a piecewise-constant
/// reference.
pub fn control_voltage(s: &State, y_r: f64, cfg: &ControllerConfig, p: &PlantParams) -> ControlOutput {
    let x3d_dot = virtual_current_derivative(s, y_r, 0.0, cfg, p);
    output(s, coords_with(s, y_r, x3d_dot, cfg, p), cfg, p)
}

/// Controller instance. Carries the low-pass state of the filtered
/// derivative mode, so one instance belongs to one simulation.
#[derive(Clone, Debug)]
pub struct Controller {
    cfg: ControllerConfig,
    plant: PlantParams,
    filter: Option<FilterState>,
}

#[derive(Clone, Copy, Debug)]
struct FilterState {
    t: f64,
    x3d: f64,
    rate: f64,
}

impl Controller {
    /// `plant` is only consulted through its surface bounds and the certain
    /// constants (m, R, λ, K, N, ρ0).
    pub fn new(cfg: ControllerConfig, plant: PlantParams) -> Result<Self> {
        cfg.validate()?;
        Ok(Self { cfg, plant, filter: None })
    }

    pub fn config(&self) -> &ControllerConfig {
        &self.cfg
    }

    pub fn reset(&mut self) {
        self.filter = None;
    }

    pub fn evaluate(&mut self, s: &State, y_r: f64, t: f64) -> ControlOutput {
        let (cfg, p) = (&self.cfg, &self.plant);
        match cfg.derivative {
            DerivativeMode::Analytic => control_voltage(s, y_r, cfg, p),
            DerivativeMode::Filtered { tau } => {
                let mut coords = coords_with(s, y_r, 0.0, cfg, p);
                let rate = match self.filter {
                    Some(f) if t > f.t => {
                        let h = t - f.t;
                        let raw = (coords.x3d - f.x3d) / h;
                        f.rate + h / (tau + h) * (raw - f.rate)
                    }
                    Some(f) => f.rate,
                    None => 0.0,
                };
                self.filter = Some(FilterState { t, x3d: coords.x3d, rate });
                coords.x3d_dot = rate;
                output(s, coords, cfg, p)
            }
        }
    }
}
