//! Reluctance-network plant.
//!
//! Sign convention: [`plant_derivative`] applies the magnetic term as
//! `+½ x3² μ(x1)` in the velocity equation, while [`magnetic_force`] returns
//! the co-energy force `−½ x3² μ(x1)`. The two differ only by the orientation
//! of the `x1` axis; the controller is designed against the vector field.

mod fringing;

use serde::{Deserialize, Serialize};

pub use fringing::{FringingModel, Gap, PiecewiseSurface, SurfaceBounds, SurfaceVariant};

use crate::{Error, Result};

/// Vacuum permeability (H·m⁻¹).
pub const MU_0: f64 = 4.0e-7 * std::f64::consts::PI;

/// Plant state: airgap (m), velocity (m/s), coil current (A).
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct State {
    pub x1: f64,
    pub x2: f64,
    pub x3: f64,
}

/// Time derivative of a [`State`].
pub type StateRate = State;

impl State {
    pub const fn new(x1: f64, x2: f64, x3: f64) -> Self {
        Self { x1, x2, x3 }
    }

    pub fn is_finite(&self) -> bool {
        self.x1.is_finite() && self.x2.is_finite() && self.x3.is_finite()
    }

    /// `self + h · rate`
    pub fn advanced(&self, rate: &StateRate, h: f64) -> Self {
        Self { x1: self.x1 + h * rate.x1, x2: self.x2 + h * rate.x2, x3: self.x3 + h * rate.x3 }
    }

    fn check(&self) -> Result<()> {
        if self.is_finite() {
            Ok(())
        } else {
            Err(Error::Input(format!("non-finite state {self:?}")))
        }
    }
}

/// Physical constants of the actuator.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PlantParams {
    /// Nominal airgap reluctance slope (H⁻¹·m⁻¹).
    pub rho_x: f64,
    /// Reluctance of the iron path (H⁻¹).
    pub rho_0: f64,
    /// Coil turns.
    pub turns: u32,
    /// Viscous friction (N·s·m⁻¹).
    pub friction: f64,
    /// Spring stiffness (N·m⁻¹).
    pub spring: f64,
    /// Moving mass (kg).
    pub mass: f64,
    /// Coil resistance (Ω).
    pub resistance: f64,
    /// Vacuum permeability (H·m⁻¹).
    pub mu_0: f64,
    pub x0: State,
    /// Largest airgap over which the fringing model is checked (m).
    pub stroke: f64,
    /// Clamp `x1` at 0 with a perfectly inelastic stop.
    pub hard_stop: bool,
    pub fringing: FringingModel,
}

impl PlantParams {
    /// Reference actuator: N = 70, ρx = 2.8e10 H⁻¹m⁻¹, ρ0 = 630 H⁻¹,
    /// λ = 5 N·s/m, K = 120 N/m, m = 0.1 kg, R = 0.4 Ω, x0 = (1 mm, 0, 0).
    ///
    /// Both airgaps get the same constant surface so that
    /// `1/(μ0 S1) + 1/(μ0 S3) = ρx`; the controller sees ±20 % around it.
    pub fn reference() -> Self {
        let rho_x = 2.8e10;
        let s = Self::split_surface(rho_x, MU_0);
        let fringing = FringingModel::constant(s, s, 0.2).expect("reference bounds are valid");
        Self {
            rho_x,
            rho_0: 630.0,
            turns: 70,
            friction: 5.0,
            spring: 120.0,
            mass: 0.1,
            resistance: 0.4,
            mu_0: MU_0,
            x0: State::new(0.001, 0.0, 0.0),
            stroke: 0.005,
            hard_stop: false,
            fringing,
        }
    }

    /// Surface shared by two identical gaps whose summed slope is `rho_x`.
    pub fn split_surface(rho_x: f64, mu_0: f64) -> f64 {
        2.0 / (mu_0 * rho_x)
    }

    pub fn with_fringing(mut self, fringing: FringingModel) -> Self {
        self.fringing = fringing;
        self
    }

    pub fn turns_sq(&self) -> f64 {
        let n = self.turns as f64;
        n * n
    }

    pub fn validate(&self) -> Result<()> {
        let check = |name: &str, v: f64, ok: bool| {
            if v.is_finite() && ok {
                Ok(())
            } else {
                Err(Error::Params(format!("{name} = {v} is out of range")))
            }
        };
        check("rho_x", self.rho_x, self.rho_x > 0.0)?;
        check("rho_0", self.rho_0, self.rho_0 > 0.0)?;
        check("turns", self.turns as f64, self.turns >= 1)?;
        check("friction", self.friction, self.friction >= 0.0)?;
        check("spring", self.spring, self.spring >= 0.0)?;
        check("mass", self.mass, self.mass > 0.0)?;
        check("resistance", self.resistance, self.resistance > 0.0)?;
        check("mu_0", self.mu_0, self.mu_0 > 0.0)?;
        if !self.x0.is_finite() {
            return Err(Error::Params(format!("x0 = {:?} is not finite", self.x0)));
        }
        if self.hard_stop && self.x0.x1 < 0.0 {
            return Err(Error::Params("x0.x1 must be >= 0 with the hard stop enabled".into()));
        }
        self.fringing.validate(self.stroke)
    }
}

fn check_x1(x1: f64) -> Result<()> {
    if x1.is_finite() {
        Ok(())
    } else {
        Err(Error::Input(format!("non-finite airgap x1 = {x1}")))
    }
}

/// Effective surface of one airgap at `x1` (m²).
pub fn airgap_surface(x1: f64, model: &FringingModel, gap: Gap) -> Result<f64> {
    check_x1(x1)?;
    Ok(model.surface(x1, gap))
}

/// `ρ(x1) = x1/(μ0 S1(x1)) + x1/(μ0 S3(x1)) + ρ0` (H⁻¹).
pub fn reluctance(x1: f64, p: &PlantParams) -> f64 {
    let v = &p.fringing.variant;
    (v.reluctance_length(x1, Gap::First) + v.reluctance_length(x1, Gap::Third)) / p.mu_0 + p.rho_0
}

/// `dρ/dx1` (H⁻¹·m⁻¹); the constant `ρx` when both surfaces are constant.
pub fn reluctance_slope(x1: f64, p: &PlantParams) -> f64 {
    let v = &p.fringing.variant;
    (v.reluctance_length_slope(x1, Gap::First) + v.reluctance_length_slope(x1, Gap::Third)) / p.mu_0
}

/// `L = N²/ρ(x1)` (H).
pub fn inductance(x1: f64, p: &PlantParams) -> f64 {
    p.turns_sq() / reluctance(x1, p)
}

/// `μ(x1) = −dL/dx1 = N² ρ'(x1)/ρ(x1)²` (H·m⁻¹).
pub fn mu_coefficient(x1: f64, p: &PlantParams) -> f64 {
    let rho = reluctance(x1, p);
    p.turns_sq() * reluctance_slope(x1, p) / (rho * rho)
}

/// `½ L(x1) x3²` (J).
pub fn magnetic_energy(x1: f64, x3: f64, p: &PlantParams) -> f64 {
    0.5 * inductance(x1, p) * x3 * x3
}

/// `−½ x3² μ(x1)` (N).
pub fn magnetic_force(x1: f64, x3: f64, p: &PlantParams) -> f64 {
    -0.5 * x3 * x3 * mu_coefficient(x1, p)
}

/// Friction plus spring, `−λ x2 − K x1` (N).
pub fn external_force(x1: f64, x2: f64, p: &PlantParams) -> f64 {
    -p.friction * x2 - p.spring * x1
}

/// Closed-form vector field without input validation; used by the integrator.
pub(crate) fn vector_field(s: &State, u: f64, p: &PlantParams) -> StateRate {
    let rho = reluctance(s.x1, p);
    let n2 = p.turns_sq();
    let l = n2 / rho;
    let mu = n2 * reluctance_slope(s.x1, p) / (rho * rho);
    State {
        x1: s.x2,
        x2: (0.5 * s.x3 * s.x3 * mu + external_force(s.x1, s.x2, p)) / p.mass,
        x3: (u - p.resistance * s.x3 + s.x2 * s.x3 * mu) / l,
    }
}

/// State derivative of the actuator driven by coil voltage `u`.
pub fn plant_derivative(s: &State, u: f64, p: &PlantParams) -> Result<StateRate> {
    s.check()?;
    if !u.is_finite() {
        return Err(Error::Input(format!("non-finite input voltage {u}")));
    }
    Ok(vector_field(s, u, p))
}

#[cfg(test)]
mod tests {
    use super::*;

    const RHO_1MM: f64 = 2.8e10 * 0.001 + 630.0;

    fn rel(a: f64, b: f64) -> f64 {
        ((a - b) / b).abs()
    }

    #[test]
    fn reluctance_values() {
        let p = PlantParams::reference();
        assert_eq!(reluctance(0.0, &p), 630.0);
        assert!(rel(reluctance(0.001, &p), RHO_1MM) < 1e-12);
        assert!(rel(reluctance(0.003, &p), 8.400063e7) < 1e-12);
    }

    #[test]
    fn inductance_values() {
        let p = PlantParams::reference();
        assert!(rel(inductance(0.0, &p), 4900.0 / 630.0) < 1e-12);
        assert!(rel(inductance(0.001, &p), 4900.0 / RHO_1MM) < 1e-12);
        assert!(inductance(0.001, &p) > inductance(0.002, &p));
    }

    #[test]
    fn mu_values() {
        let p = PlantParams::reference();
        assert!(rel(mu_coefficient(0.0, &p), 4900.0 * 2.8e10 / (630.0 * 630.0)) < 1e-12);
        let expected = 4900.0 * 2.8e10 / RHO_1MM.powi(2);
        assert!(rel(mu_coefficient(0.001, &p), expected) < 1e-12);
        assert!((mu_coefficient(0.001, &p) - 0.175).abs() < 1e-5);
    }

    #[test]
    fn energy_and_force() {
        let p = PlantParams::reference();
        assert_eq!(magnetic_energy(0.001, 0.0, &p), 0.0);
        assert!(rel(magnetic_energy(0.001, 1.0, &p), 0.5 * 4900.0 / RHO_1MM) < 1e-12);
        assert!(rel(magnetic_energy(0.001, 2.0, &p), 4.0 * magnetic_energy(0.001, 1.0, &p)) < 1e-15);
        assert_eq!(magnetic_force(0.001, 0.0, &p), 0.0);
        assert!((magnetic_force(0.001, 1.0, &p) + 0.0875).abs() < 1e-5);
        assert!(rel(magnetic_force(0.002, 3.0, &p), 9.0 * magnetic_force(0.002, 1.0, &p)) < 1e-14);
    }

    #[test]
    fn external_forces() {
        let p = PlantParams::reference();
        assert_eq!(external_force(0.0, 0.0, &p), 0.0);
        assert!((external_force(0.001, 0.0, &p) + 0.12).abs() < 1e-15);
        assert!((external_force(0.0, 0.1, &p) + 0.5).abs() < 1e-15);
    }

    #[test]
    fn derivative_examples() {
        let p = PlantParams::reference();
        let s = State::new(0.001, 0.0, 0.0);
        let d = plant_derivative(&s, 0.0, &p).unwrap();
        assert_eq!(d.x1, 0.0);
        assert!((d.x2 + 1.2).abs() < 1e-12);
        assert_eq!(d.x3, 0.0);
        let d = plant_derivative(&s, 1.0, &p).unwrap();
        assert!(rel(d.x3, RHO_1MM / 4900.0) < 1e-12);
        assert!((d.x3 - 5714.4).abs() < 0.1);
        let rest = plant_derivative(&State::default(), 0.0, &p).unwrap();
        assert_eq!(rest, State::default());
    }

    #[test]
    fn derivative_rejects_non_finite() {
        let p = PlantParams::reference();
        assert!(plant_derivative(&State::new(f64::NAN, 0.0, 0.0), 0.0, &p).is_err());
        assert!(plant_derivative(&State::default(), f64::INFINITY, &p).is_err());
        assert!(airgap_surface(f64::NAN, &p.fringing, Gap::First).is_err());
    }

    #[test]
    fn reference_params_validate() {
        PlantParams::reference().validate().unwrap();
        let mut p = PlantParams::reference();
        p.mass = 0.0;
        assert!(p.validate().is_err());
        let mut p = PlantParams::reference();
        p.turns = 0;
        assert!(p.validate().is_err());
    }
}
