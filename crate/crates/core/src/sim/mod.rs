//! Fixed-step closed-loop simulation.
//!
//! The control is evaluated at the start of each control period and held
//! over it (zero-order hold), so the integrator only ever sees a smooth
//! right-hand side.

mod sampling;

use serde::{Deserialize, Serialize};

pub use sampling::{sample_fringing, REALIZATION_KNOTS};

use crate::controller::{certify_gains, ControlOutput, Controller, ControllerConfig, GainCertificate};
use crate::model::{self, PlantParams, State};
use crate::{Error, Result};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Integrator {
    #[default]
    Rk4,
    Euler,
}

/// Piecewise-constant position reference: `(start time, value)` pairs.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReferenceSchedule {
    points: Vec<(f64, f64)>,
}

impl ReferenceSchedule {
    pub fn new(points: Vec<(f64, f64)>) -> Result<Self> {
        if points.is_empty() || points[0].0 != 0.0 {
            return Err(Error::Params("reference schedule must start at t = 0".into()));
        }
        if points.windows(2).any(|w| !(w[1].0 > w[0].0)) {
            return Err(Error::Params("reference times must be strictly increasing".into()));
        }
        if points.iter().any(|(t, y)| !(t.is_finite() && y.is_finite())) {
            return Err(Error::Params("reference entries must be finite".into()));
        }
        Ok(Self { points })
    }

    pub fn step(value: f64) -> Self {
        Self { points: vec![(0.0, value)] }
    }

    pub fn points(&self) -> &[(f64, f64)] {
        &self.points
    }

    pub fn value_at(&self, t: f64) -> f64 {
        let i = self.points.partition_point(|&(ts, _)| ts <= t);
        self.points[i.saturating_sub(1)].1
    }

    pub fn max_abs(&self) -> f64 {
        self.points.iter().map(|(_, y)| y.abs()).fold(0.0, f64::max)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    /// True plant, including the realized fringing.
    pub plant: PlantParams,
    pub controller: ControllerConfig,
    pub reference: ReferenceSchedule,
    /// Integration step (s).
    pub dt: f64,
    /// Simulated time (s).
    pub duration: f64,
    pub integrator: Integrator,
    /// One record per `decimation` steps.
    pub decimation: usize,
    /// Control update period in integration steps.
    pub control_period: usize,
    /// Seed for random fringing realizations.
    pub seed: u64,
    /// Run even when the gains are not certified.
    pub force: bool,
}

impl Scenario {
    /// Reference plant and gains, 3 mm step, RK4 at 1 µs for 0.5 s.
    pub fn reference() -> Self {
        Self {
            plant: PlantParams::reference(),
            controller: ControllerConfig::new(crate::controller::ControllerGains::reference()),
            reference: ReferenceSchedule::step(0.003),
            dt: 1e-6,
            duration: 0.5,
            integrator: Integrator::Rk4,
            decimation: 100,
            control_period: 1,
            seed: 0,
            force: false,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.plant.validate()?;
        self.controller.validate()?;
        if !(self.dt.is_finite() && self.dt > 0.0) {
            return Err(Error::Params(format!("dt must be positive, got {}", self.dt)));
        }
        if !(self.duration.is_finite() && self.duration >= 0.0) {
            return Err(Error::Params(format!("duration must be >= 0, got {}", self.duration)));
        }
        if self.duration > 0.0 && self.duration < self.dt {
            return Err(Error::Params("duration must be 0 or at least one step".into()));
        }
        if self.decimation == 0 || self.control_period == 0 {
            return Err(Error::Params("decimation and control period must be >= 1".into()));
        }
        Ok(())
    }

    pub fn steps(&self) -> usize {
        (self.duration / self.dt).round() as usize
    }

    /// Certificate for the scenario's gains over its largest reference.
    pub fn certificate(&self) -> GainCertificate {
        certify_gains(&self.controller.gains, &self.plant, self.reference.max_abs())
    }
}

/// One logged sample. Field order is the CSV column order.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Record {
    pub t: f64,
    pub x1: f64,
    pub x2: f64,
    pub x3: f64,
    pub u: f64,
    pub x3d: f64,
    #[serde(rename = "S")]
    pub s: f64,
    pub z1: f64,
    pub z2: f64,
    #[serde(rename = "V1")]
    pub v1: f64,
    #[serde(rename = "V2")]
    pub v2: f64,
    #[serde(rename = "V")]
    pub v: f64,
    pub alpha3: f64,
}

impl Record {
    pub fn state(&self) -> State {
        State::new(self.x1, self.x2, self.x3)
    }

    /// Reference in force at this sample.
    pub fn y_r(&self) -> f64 {
        self.x1 - self.z1
    }

    fn new(t: f64, s: &State, out: &ControlOutput) -> Self {
        let c = &out.coords;
        let v1 = c.z.lyapunov();
        let v2 = 0.5 * c.s * c.s;
        Self {
            t,
            x1: s.x1,
            x2: s.x2,
            x3: s.x3,
            u: out.u,
            x3d: c.x3d,
            s: c.s,
            z1: c.z.z1,
            z2: c.z.z2,
            v1,
            v2,
            v: v1 + v2,
            alpha3: out.alpha3,
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub records: Vec<Record>,
    /// Sign changes of `u` between each record and the next, counted at the
    /// full control rate.
    pub switches: Vec<u32>,
    pub dt: f64,
    pub decimation: usize,
}

impl Trajectory {
    /// Time between records (s).
    pub fn sample_period(&self) -> f64 {
        self.dt * self.decimation as f64
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }
}

/// One integration step of the plant with the input held at `u`.
pub fn integrate(s: &State, u: f64, dt: f64, integrator: Integrator, p: &PlantParams) -> State {
    let f = |x: &State| model::vector_field(x, u, p);
    match integrator {
        Integrator::Euler => s.advanced(&f(s), dt),
        Integrator::Rk4 => {
            let k1 = f(s);
            let k2 = f(&s.advanced(&k1, 0.5 * dt));
            let k3 = f(&s.advanced(&k2, 0.5 * dt));
            let k4 = f(&s.advanced(&k3, dt));
            State {
                x1: s.x1 + dt / 6.0 * (k1.x1 + 2.0 * k2.x1 + 2.0 * k3.x1 + k4.x1),
                x2: s.x2 + dt / 6.0 * (k1.x2 + 2.0 * k2.x2 + 2.0 * k3.x2 + k4.x2),
                x3: s.x3 + dt / 6.0 * (k1.x3 + 2.0 * k2.x3 + 2.0 * k3.x3 + k4.x3),
            }
        }
    }
}

/// Closed loop stepped one integration interval at a time.
#[derive(Clone, Debug)]
pub struct Simulator {
    scenario: Scenario,
    controller: Controller,
    state: State,
    step_index: usize,
    held: ControlOutput,
}

impl Simulator {
    pub fn new(scenario: Scenario) -> Result<Self> {
        scenario.validate()?;
        let controller = Controller::new(scenario.controller, scenario.plant.clone())?;
        let state = scenario.plant.x0;
        Ok(Self { scenario, controller, state, step_index: 0, held: ControlOutput::default() })
    }

    pub fn state(&self) -> &State {
        &self.state
    }

    pub fn time(&self) -> f64 {
        self.step_index as f64 * self.scenario.dt
    }

    /// Control currently applied.
    pub fn held(&self) -> &ControlOutput {
        &self.held
    }

    /// Advance by one step; returns the control applied over it.
    pub fn step(&mut self) -> Result<ControlOutput> {
        let sc = &self.scenario;
        let t = self.time();
        if self.step_index.is_multiple_of(sc.control_period) {
            let y_r = sc.reference.value_at(t);
            self.held = self.controller.evaluate(&self.state, y_r, t);
        }
        let mut next = integrate(&self.state, self.held.u, sc.dt, sc.integrator, &sc.plant);
        if sc.plant.hard_stop && next.x1 < 0.0 {
            next.x1 = 0.0;
            next.x2 = 0.0;
        }
        self.step_index += 1;
        if !next.is_finite() {
            return Err(Error::Divergence { t: self.time() });
        }
        self.state = next;
        Ok(self.held)
    }
}

/// Simulate the whole scenario.
///
/// Refuses uncertified gains unless `scenario.force` is set.
pub fn run(scenario: &Scenario) -> Result<Trajectory> {
    scenario.validate()?;
    if !scenario.force && !scenario.certificate().certified() {
        return Err(Error::Uncertified);
    }
    let n = scenario.steps();
    let dec = scenario.decimation;
    let mut sim = Simulator::new(scenario.clone())?;
    let mut traj = Trajectory {
        records: Vec::with_capacity(n / dec + 1),
        switches: Vec::with_capacity(n / dec + 1),
        dt: scenario.dt,
        decimation: dec,
    };
    let mut last_sign = 0.0f64;
    for k in 0..n {
        let t = sim.time();
        let s = *sim.state();
        let out = sim.step()?;
        if k % dec == 0 {
            traj.records.push(Record::new(t, &s, &out));
            traj.switches.push(0);
        }
        let sign = if out.u > 0.0 {
            1.0
        } else if out.u < 0.0 {
            -1.0
        } else {
            0.0
        };
        if sign != 0.0 {
            if last_sign != 0.0 && sign != last_sign {
                if let Some(c) = traj.switches.last_mut() {
                    *c += 1;
                }
            }
            last_sign = sign;
        }
    }
    Ok(traj)
}
