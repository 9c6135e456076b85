//! Experiment configuration files (TOML).
//!
//! A file holds the plant, the controller, the scenario, output names and an
//! optional sweep. Unknown keys are rejected and parse errors carry the line
//! and column.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::controller::{ControllerConfig, ControllerGains, DerivativeMode, MuArgument};
use crate::model::{FringingModel, Gap, PlantParams, State, SurfaceBounds, SurfaceVariant, MU_0};
use crate::sim::{sample_fringing, Integrator, ReferenceSchedule, Scenario};
use crate::{Error, Result};

pub const SCHEMA_VERSION: u32 = 1;

/// The bundled 3 mm step configuration.
pub const REFERENCE_STEP: &str = include_str!("../../../configs/reference_step.toml");

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    pub schema_version: u32,
    pub plant: PlantSection,
    #[serde(default)]
    pub controller: ControllerSection,
    #[serde(default)]
    pub scenario: ScenarioSection,
    #[serde(default)]
    pub outputs: OutputsSection,
    pub sweep: Option<SweepSection>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PlantSection {
    pub rho_x: f64,
    pub rho_0: f64,
    pub turns: u32,
    pub friction: f64,
    pub spring: f64,
    pub mass: f64,
    pub resistance: f64,
    #[serde(default = "default_mu_0")]
    pub mu_0: f64,
    pub x0: [f64; 3],
    #[serde(default = "default_stroke")]
    pub stroke: f64,
    #[serde(default)]
    pub hard_stop: bool,
    #[serde(default)]
    pub fringing: FringingSection,
}

fn default_mu_0() -> f64 {
    MU_0
}

fn default_stroke() -> f64 {
    0.005
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FringingSection {
    /// Defaults to constant surfaces matching `rho_x`.
    pub surface: Option<SurfaceVariant>,
    /// Relative half-width of the bounds around the surface at zero airgap.
    /// Ignored when `lower` and `upper` are given; defaults to 0.2.
    pub uncertainty: Option<f64>,
    /// Explicit bounds, m², per gap.
    pub lower: Option<[f64; 2]>,
    pub upper: Option<[f64; 2]>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DerivativeKind {
    Analytic,
    Filtered,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ControllerSection {
    pub alpha1: f64,
    pub alpha2: f64,
    pub epsilon1: f64,
    pub theta: f64,
    pub derivative: DerivativeKind,
    /// Filter time constant for `derivative = "filtered"`, s.
    pub filter_tau: f64,
    pub mu_argument: MuArgument,
    /// Saturation width replacing `sign(S)`, A.
    pub boundary_layer: Option<f64>,
}

impl Default for ControllerSection {
    fn default() -> Self {
        let g = ControllerGains::reference();
        Self {
            alpha1: g.alpha1,
            alpha2: g.alpha2,
            epsilon1: g.epsilon1,
            theta: g.theta,
            derivative: DerivativeKind::Analytic,
            filter_tau: 1e-4,
            mu_argument: MuArgument::Position,
            boundary_layer: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ScenarioSection {
    /// Step reference, m. Exclusive with `schedule`.
    pub reference: Option<f64>,
    /// Piecewise-constant reference as `[time, value]` pairs.
    pub schedule: Option<Vec<(f64, f64)>>,
    pub dt: f64,
    pub duration: f64,
    pub integrator: Integrator,
    pub decimation: usize,
    pub control_period: usize,
    pub seed: u64,
}

impl Default for ScenarioSection {
    fn default() -> Self {
        let s = Scenario::reference();
        Self {
            reference: None,
            schedule: None,
            dt: s.dt,
            duration: s.duration,
            integrator: s.integrator,
            decimation: s.decimation,
            control_period: s.control_period,
            seed: s.seed,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputsSection {
    pub trajectory: String,
    pub report: String,
    pub bounds: String,
    /// Grid points over `[0, stroke]` for the bounds table.
    pub bounds_points: usize,
    pub sweep: String,
}

impl Default for OutputsSection {
    fn default() -> Self {
        Self {
            trajectory: "trajectory.csv".into(),
            report: "report.toml".into(),
            bounds: "bounds.csv".into(),
            bounds_points: 201,
            sweep: "sweep.csv".into(),
        }
    }
}

/// Axes of a batch run. A missing axis keeps the base value; an empty list
/// yields no rows.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSection {
    pub alpha1: Option<Vec<f64>>,
    pub alpha2: Option<Vec<f64>>,
    /// Initial airgaps, m.
    pub initial_positions: Option<Vec<f64>>,
    /// Number of random fringing realizations drawn from the scenario seed.
    /// Missing means the configured surface only.
    pub realizations: Option<usize>,
}

/// One combination of a sweep, in output order.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepPoint {
    pub index: usize,
    pub alpha1: f64,
    pub alpha2: f64,
    pub x1_0: f64,
    /// Index of the random realization, or `None` for the configured surface.
    pub realization: Option<usize>,
}

impl ConfigFile {
    pub fn parse(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        if cfg.schema_version != SCHEMA_VERSION {
            return Err(Error::Config(format!(
                "unsupported schema_version {} (expected {SCHEMA_VERSION})",
                cfg.schema_version
            )));
        }
        cfg.scenario()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text =
            std::fs::read_to_string(path).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        Self::parse(&text).map_err(|e| match e {
            Error::Config(m) => Error::Config(format!("{}: {m}", path.display())),
            other => other,
        })
    }

    pub fn reference_step() -> Self {
        Self::parse(REFERENCE_STEP).expect("bundled config is valid")
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn plant(&self) -> Result<PlantParams> {
        let p = &self.plant;
        let variant = match &p.fringing.surface {
            Some(v) => v.clone(),
            None => {
                let s = PlantParams::split_surface(p.rho_x, p.mu_0);
                SurfaceVariant::Constant { s1: s, s3: s }
            }
        };
        let bounds = match (p.fringing.lower, p.fringing.upper) {
            (Some(lower), Some(upper)) => SurfaceBounds { lower, upper },
            (None, None) => {
                variant.check_parameters()?;
                let nominal = Gap::ALL.map(|g| variant.surface(0.0, g));
                SurfaceBounds::relative(nominal, p.fringing.uncertainty.unwrap_or(0.2))?
            }
            _ => return Err(Error::Config("fringing bounds need both `lower` and `upper`".into())),
        };
        let plant = PlantParams {
            rho_x: p.rho_x,
            rho_0: p.rho_0,
            turns: p.turns,
            friction: p.friction,
            spring: p.spring,
            mass: p.mass,
            resistance: p.resistance,
            mu_0: p.mu_0,
            x0: State::new(p.x0[0], p.x0[1], p.x0[2]),
            stroke: p.stroke,
            hard_stop: p.hard_stop,
            fringing: FringingModel::new(variant, bounds, p.stroke)?,
        };
        plant.validate()?;
        Ok(plant)
    }

    pub fn controller(&self) -> Result<ControllerConfig> {
        let c = &self.controller;
        let cfg = ControllerConfig {
            gains: ControllerGains {
                alpha1: c.alpha1,
                alpha2: c.alpha2,
                epsilon1: c.epsilon1,
                theta: c.theta,
            },
            derivative: match c.derivative {
                DerivativeKind::Analytic => DerivativeMode::Analytic,
                DerivativeKind::Filtered => DerivativeMode::Filtered { tau: c.filter_tau },
            },
            mu_argument: c.mu_argument,
            boundary_layer: c.boundary_layer,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn reference(&self) -> Result<ReferenceSchedule> {
        match (&self.scenario.reference, &self.scenario.schedule) {
            (Some(_), Some(_)) => {
                Err(Error::Config("give either `reference` or `schedule`, not both".into()))
            }
            (Some(y), None) => Ok(ReferenceSchedule::step(*y)),
            (None, Some(points)) => ReferenceSchedule::new(points.clone()),
            (None, None) => Ok(ReferenceSchedule::step(0.003)),
        }
    }

    pub fn scenario(&self) -> Result<Scenario> {
        let s = &self.scenario;
        let sc = Scenario {
            plant: self.plant()?,
            controller: self.controller()?,
            reference: self.reference()?,
            dt: s.dt,
            duration: s.duration,
            integrator: s.integrator,
            decimation: s.decimation,
            control_period: s.control_period,
            seed: s.seed,
            force: false,
        };
        sc.validate()?;
        Ok(sc)
    }

    /// All sweep combinations in a fixed order: gains outermost, then
    /// initial position, then realization.
    pub fn sweep_points(&self) -> Result<Vec<SweepPoint>> {
        let base = self.scenario()?;
        let sw = self.sweep.clone().unwrap_or_default();
        let g = base.controller.gains;
        let a1 = sw.alpha1.unwrap_or_else(|| vec![g.alpha1]);
        let a2 = sw.alpha2.unwrap_or_else(|| vec![g.alpha2]);
        let xs = sw.initial_positions.unwrap_or_else(|| vec![base.plant.x0.x1]);
        let reals: Vec<Option<usize>> = match sw.realizations {
            None => vec![None],
            Some(n) => (0..n).map(Some).collect(),
        };
        let mut out = Vec::new();
        for &alpha1 in &a1 {
            for &alpha2 in &a2 {
                for &x1_0 in &xs {
                    for &realization in &reals {
                        out.push(SweepPoint { index: out.len(), alpha1, alpha2, x1_0, realization });
                    }
                }
            }
        }
        Ok(out)
    }

    /// Scenario for one sweep point. `realizations` is the output of
    /// [`ConfigFile::realizations`].
    pub fn sweep_scenario(&self, pt: &SweepPoint, realizations: &[FringingModel]) -> Result<Scenario> {
        let mut sc = self.scenario()?;
        sc.controller.gains.alpha1 = pt.alpha1;
        sc.controller.gains.alpha2 = pt.alpha2;
        sc.plant.x0.x1 = pt.x1_0;
        if let Some(i) = pt.realization {
            let m =
                realizations.get(i).ok_or_else(|| Error::Config(format!("realization {i} was not drawn")))?;
            sc.plant.fringing = m.clone();
        }
        sc.validate()?;
        Ok(sc)
    }

    /// Random fringing realizations for the sweep, drawn once from the
    /// scenario seed within the configured bounds.
    pub fn realizations(&self) -> Result<Vec<FringingModel>> {
        let n = self.sweep.as_ref().and_then(|s| s.realizations).unwrap_or(0);
        let plant = self.plant()?;
        sample_fringing(self.scenario.seed, &plant.fringing.bounds, plant.stroke, n)
    }
}
