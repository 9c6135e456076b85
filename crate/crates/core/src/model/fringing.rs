//! Airgap surface models.
//!
//! The reluctance of airgap `i` is `x1 / (mu_0 * S_i(x1))`. Every variant is
//! evaluated through two per-gap quantities:
//!
//! * the reluctance length `g_i(x1) = x1 / S_i(x1)` (m⁻¹), and
//! * its slope `g_i'(x1)`, whose reciprocal is the *incremental* surface.
//!
//! Both the effective surface `S_i` and the incremental surface `1 / g_i'`
//! must stay inside the configured bounds for the interval envelopes in
//! [`crate::bounds`] to contain the realized reluctance and force coefficient.

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// The two airgaps of the reluctance network (numbered 1 and 3 after the
/// network's series elements).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Gap {
    First,
    Third,
}

impl Gap {
    pub const ALL: [Gap; 2] = [Gap::First, Gap::Third];

    pub fn index(self) -> usize {
        match self {
            Gap::First => 0,
            Gap::Third => 1,
        }
    }

    /// Parse the network numbering (`1` or `3`).
    pub fn from_number(n: u8) -> Result<Self> {
        match n {
            1 => Ok(Gap::First),
            3 => Ok(Gap::Third),
            _ => Err(Error::Input(format!("airgap index must be 1 or 3, got {n}"))),
        }
    }
}

/// Incremental surface defined by linear interpolation between knots,
/// held constant past the last knot.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PiecewiseSurface {
    /// Knot positions (m), strictly increasing, first knot at 0.
    pub knots: Vec<f64>,
    /// Incremental surface at each knot (m²).
    pub incremental: Vec<f64>,
}

impl PiecewiseSurface {
    pub fn new(knots: Vec<f64>, incremental: Vec<f64>) -> Result<Self> {
        let s = Self { knots, incremental };
        s.validate()?;
        Ok(s)
    }

    fn validate(&self) -> Result<()> {
        if self.knots.is_empty() || self.knots.len() != self.incremental.len() {
            return Err(Error::Params(
                "piecewise surface needs matching, non-empty knot and value lists".into(),
            ));
        }
        if self.knots[0] != 0.0 {
            return Err(Error::Params("piecewise surface knots must start at 0".into()));
        }
        if self.knots.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::Params("piecewise surface knots must be strictly increasing".into()));
        }
        if self.incremental.iter().any(|s| !(s.is_finite() && *s > 0.0)) {
            return Err(Error::Params("piecewise surface values must be positive".into()));
        }
        Ok(())
    }

    /// Segment containing `x`, and the slope of the incremental surface there.
    fn segment(&self, x: f64) -> (usize, f64) {
        let k = match self.knots.partition_point(|&kn| kn <= x) {
            0 => 0,
            p => p - 1,
        };
        let slope = if k + 1 < self.knots.len() {
            (self.incremental[k + 1] - self.incremental[k]) / (self.knots[k + 1] - self.knots[k])
        } else {
            0.0
        };
        (k, slope)
    }

    fn incremental_at(&self, x: f64) -> f64 {
        let (k, slope) = self.segment(x);
        self.incremental[k] + slope * (x - self.knots[k])
    }

    /// `∫_{x_k}^{x_k + len} ds / (s_k + slope (s - x_k))`
    fn segment_integral(start: f64, slope: f64, len: f64) -> f64 {
        let t = slope * len / start;
        if t.abs() < 1e-6 {
            len / start * (1.0 - t / 2.0 + t * t / 3.0)
        } else {
            t.ln_1p() / slope
        }
    }

    fn reluctance_length(&self, x: f64) -> f64 {
        if x < 0.0 {
            // Continue the first segment so the length stays smooth at 0.
            let (_, slope) = self.segment(0.0);
            return Self::segment_integral(self.incremental[0], slope, x);
        }
        let mut acc = 0.0;
        for k in 0..self.knots.len() {
            let lo = self.knots[k];
            if x <= lo {
                break;
            }
            let hi = self.knots.get(k + 1).copied().unwrap_or(f64::INFINITY);
            let slope = if k + 1 < self.knots.len() {
                (self.incremental[k + 1] - self.incremental[k]) / (hi - lo)
            } else {
                0.0
            };
            acc += Self::segment_integral(self.incremental[k], slope, x.min(hi) - lo);
        }
        acc
    }
}

/// Surface model for both airgaps.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "variant", rename_all = "snake_case", deny_unknown_fields)]
pub enum SurfaceVariant {
    /// Airgap surfaces independent of the gap (no fringing).
    Constant { s1: f64, s3: f64 },
    /// Core surface scaled by an empirical expansion coefficient.
    Weighted { alpha1: f64, alpha3: f64, s_cm1: f64, s_cm3: f64 },
    /// Rectangular core `a × b` whose section grows to `(a + x1)(b + x1)`.
    Geometric { a1: f64, b1: f64, a3: f64, b3: f64 },
    /// Arbitrary piecewise-linear incremental surface per gap.
    Piecewise { gap1: PiecewiseSurface, gap3: PiecewiseSurface },
}

impl SurfaceVariant {
    /// Effective surface `S_i(x1)` (m²).
    pub fn surface(&self, x1: f64, gap: Gap) -> f64 {
        match self {
            SurfaceVariant::Constant { s1, s3 } => pick(gap, *s1, *s3),
            SurfaceVariant::Weighted { alpha1, alpha3, s_cm1, s_cm3 } => {
                pick(gap, alpha1 * s_cm1, alpha3 * s_cm3)
            }
            SurfaceVariant::Geometric { a1, b1, a3, b3 } => {
                let (a, b) = pick(gap, (*a1, *b1), (*a3, *b3));
                (a + x1) * (b + x1)
            }
            SurfaceVariant::Piecewise { gap1, gap3 } => {
                let p = pick(gap, gap1, gap3);
                if x1 > 0.0 {
                    x1 / p.reluctance_length(x1)
                } else {
                    p.incremental[0]
                }
            }
        }
    }

    /// Reluctance length `x1 / S_i(x1)` (m⁻¹).
    pub fn reluctance_length(&self, x1: f64, gap: Gap) -> f64 {
        match self {
            SurfaceVariant::Piecewise { gap1, gap3 } => pick(gap, gap1, gap3).reluctance_length(x1),
            _ => x1 / self.surface(x1, gap),
        }
    }

    /// `d/dx1 (x1 / S_i(x1))` (m⁻²).
    pub fn reluctance_length_slope(&self, x1: f64, gap: Gap) -> f64 {
        match self {
            SurfaceVariant::Constant { .. } | SurfaceVariant::Weighted { .. } => 1.0 / self.surface(x1, gap),
            SurfaceVariant::Geometric { a1, b1, a3, b3 } => {
                let (a, b) = pick(gap, (*a1, *b1), (*a3, *b3));
                let s = (a + x1) * (b + x1);
                (a * b - x1 * x1) / (s * s)
            }
            SurfaceVariant::Piecewise { gap1, gap3 } => 1.0 / pick(gap, gap1, gap3).incremental_at(x1),
        }
    }

    /// Incremental surface `1 / g_i'(x1)` (m²).
    pub fn incremental_surface(&self, x1: f64, gap: Gap) -> f64 {
        1.0 / self.reluctance_length_slope(x1, gap)
    }

    pub fn check_parameters(&self) -> Result<()> {
        let positive = |name: &str, v: f64| {
            if v.is_finite() && v > 0.0 {
                Ok(())
            } else {
                Err(Error::Params(format!("{name} must be positive and finite, got {v}")))
            }
        };
        match self {
            SurfaceVariant::Constant { s1, s3 } => {
                positive("s1", *s1)?;
                positive("s3", *s3)
            }
            SurfaceVariant::Weighted { alpha1, alpha3, s_cm1, s_cm3 } => {
                positive("alpha1", *alpha1)?;
                positive("alpha3", *alpha3)?;
                positive("s_cm1", *s_cm1)?;
                positive("s_cm3", *s_cm3)
            }
            SurfaceVariant::Geometric { a1, b1, a3, b3 } => {
                positive("a1", *a1)?;
                positive("b1", *b1)?;
                positive("a3", *a3)?;
                positive("b3", *b3)
            }
            SurfaceVariant::Piecewise { gap1, gap3 } => {
                gap1.validate()?;
                gap3.validate()
            }
        }
    }
}

fn pick<T>(gap: Gap, first: T, third: T) -> T {
    match gap {
        Gap::First => first,
        Gap::Third => third,
    }
}

/// Surface bounds `S̲_i ≤ S_i ≤ S̄_i` per airgap, indexed by [`Gap::index`].
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SurfaceBounds {
    pub lower: [f64; 2],
    pub upper: [f64; 2],
}

impl SurfaceBounds {
    /// Symmetric bounds `(1 ∓ fraction) · nominal`.
    pub fn relative(nominal: [f64; 2], fraction: f64) -> Result<Self> {
        if !(0.0..1.0).contains(&fraction) {
            return Err(Error::Params(format!("bound fraction must lie in [0, 1), got {fraction}")));
        }
        let b = Self {
            lower: nominal.map(|s| s * (1.0 - fraction)),
            upper: nominal.map(|s| s * (1.0 + fraction)),
        };
        b.validate()?;
        Ok(b)
    }

    pub fn lower(&self, gap: Gap) -> f64 {
        self.lower[gap.index()]
    }

    pub fn upper(&self, gap: Gap) -> f64 {
        self.upper[gap.index()]
    }

    pub fn validate(&self) -> Result<()> {
        for gap in Gap::ALL {
            let (lo, hi) = (self.lower(gap), self.upper(gap));
            if !(lo.is_finite() && hi.is_finite() && lo > 0.0 && lo <= hi) {
                return Err(Error::Params(format!(
                    "surface bounds for gap {gap:?} must satisfy 0 < lower <= upper, got [{lo}, {hi}]"
                )));
            }
        }
        Ok(())
    }
}

/// Number of grid intervals used to check a model against its bounds.
const CHECK_INTERVALS: usize = 200;
/// Relative slack for rounding in the containment check.
const CHECK_SLACK: f64 = 1e-12;

/// A surface model together with the bounds the controller is told about.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FringingModel {
    pub variant: SurfaceVariant,
    pub bounds: SurfaceBounds,
}

impl FringingModel {
    /// Build and check that effective and incremental surfaces stay inside
    /// `bounds` on a grid over `[0, stroke]`.
    pub fn new(variant: SurfaceVariant, bounds: SurfaceBounds, stroke: f64) -> Result<Self> {
        let m = Self { variant, bounds };
        m.validate(stroke)?;
        Ok(m)
    }

    /// Constant surfaces with symmetric relative bounds around them.
    pub fn constant(s1: f64, s3: f64, bound_fraction: f64) -> Result<Self> {
        let bounds = SurfaceBounds::relative([s1, s3], bound_fraction)?;
        Self::new(SurfaceVariant::Constant { s1, s3 }, bounds, 0.0)
    }

    pub fn surface(&self, x1: f64, gap: Gap) -> f64 {
        self.variant.surface(x1, gap)
    }

    pub fn validate(&self, stroke: f64) -> Result<()> {
        self.variant.check_parameters()?;
        self.bounds.validate()?;
        if !(stroke.is_finite() && stroke >= 0.0) {
            return Err(Error::Params(format!("stroke must be finite and >= 0, got {stroke}")));
        }
        for i in 0..=CHECK_INTERVALS {
            let x = stroke * i as f64 / CHECK_INTERVALS as f64;
            for gap in Gap::ALL {
                let lo = self.bounds.lower(gap) * (1.0 - CHECK_SLACK);
                let hi = self.bounds.upper(gap) * (1.0 + CHECK_SLACK);
                let s = self.variant.surface(x, gap);
                if !(lo..=hi).contains(&s) {
                    return Err(Error::Params(format!(
                        "surface of gap {gap:?} at x1 = {x} m is {s} m², outside [{}, {}]",
                        self.bounds.lower(gap),
                        self.bounds.upper(gap)
                    )));
                }
                let slope = self.variant.reluctance_length_slope(x, gap);
                if !(slope > 0.0) {
                    return Err(Error::Params(format!(
                        "gap {gap:?} reluctance stops increasing at x1 = {x} m"
                    )));
                }
                let inc = 1.0 / slope;
                if !(lo..=hi).contains(&inc) {
                    return Err(Error::Params(format!(
                        "incremental surface of gap {gap:?} at x1 = {x} m is {inc} m², outside [{}, {}]",
                        self.bounds.lower(gap),
                        self.bounds.upper(gap)
                    )));
                }
            }
        }
        Ok(())
    }
}
