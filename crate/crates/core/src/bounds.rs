//! Interval envelopes of `ρ`, `L` and `μ` over the admissible airgap surfaces.
//!
//! Lower reluctance comes from the upper surfaces and vice versa, and the
//! reciprocal in `L = N²/ρ` flips the order again:
//!
//! ```text
//! ρ̲ = x1 ρx̲ + ρ0      ρx̲ = 1/(μ0 S̄1) + 1/(μ0 S̄3)
//! ρ̄ = x1 ρx̄ + ρ0      ρx̄ = 1/(μ0 S̲1) + 1/(μ0 S̲3)
//! L̲ = N²/ρ̄            L̄ = N²/ρ̲
//! μ̲ = N² ρx̲/ρ̄²        μ̄ = N² ρx̄/ρ̲²
//! ```
//!
//! The slope in the `μ` envelope is itself bounded (`ρx̲ … ρx̄`), so the
//! envelope contains `−dL/dx1` of every surface model whose effective and
//! incremental surfaces respect the bounds, including at `x1 = 0`.

use serde::{Deserialize, Serialize};

use crate::model::{Gap, PlantParams};

/// A closed interval `[lower, upper]`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    pub lower: f64,
    pub upper: f64,
}

impl Interval {
    pub fn contains(&self, v: f64) -> bool {
        self.lower <= v && v <= self.upper
    }

    /// Containment with a relative slack for rounding.
    pub fn contains_rel(&self, v: f64, rel: f64) -> bool {
        self.lower * (1.0 - rel) <= v && v <= self.upper * (1.0 + rel)
    }
}

/// Envelopes of the three uncertain plant functions at one airgap.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EnvelopeTriple {
    pub x1: f64,
    pub rho: Interval,
    pub inductance: Interval,
    pub mu: Interval,
}

/// Bounds on the airgap reluctance slope, `(ρx̲, ρx̄)`.
pub fn rho_slope_bounds(p: &PlantParams) -> (f64, f64) {
    let b = &p.fringing.bounds;
    let sum = |f: &dyn Fn(Gap) -> f64| Gap::ALL.iter().map(|&g| 1.0 / (p.mu_0 * f(g))).sum::<f64>();
    (sum(&|g| b.upper(g)), sum(&|g| b.lower(g)))
}

/// `(ρ̲(x1), ρ̄(x1))`.
pub fn rho_bounds(x1: f64, p: &PlantParams) -> (f64, f64) {
    let (lo, hi) = rho_slope_bounds(p);
    (x1 * lo + p.rho_0, x1 * hi + p.rho_0)
}

/// `(L̲(x1), L̄(x1)) = (N²/ρ̄, N²/ρ̲)`.
pub fn inductance_bounds(x1: f64, p: &PlantParams) -> (f64, f64) {
    let (rho_lo, rho_hi) = rho_bounds(x1, p);
    let n2 = p.turns_sq();
    (n2 / rho_hi, n2 / rho_lo)
}

/// `(μ̲(x1), μ̄(x1)) = (N² ρx̲/ρ̄², N² ρx̄/ρ̲²)`.
pub fn mu_bounds(x1: f64, p: &PlantParams) -> (f64, f64) {
    let (slope_lo, slope_hi) = rho_slope_bounds(p);
    let (rho_lo, rho_hi) = rho_bounds(x1, p);
    let n2 = p.turns_sq();
    (n2 * slope_lo / (rho_hi * rho_hi), n2 * slope_hi / (rho_lo * rho_lo))
}

/// `dμ̲/dx1`, used when differentiating the virtual current.
pub fn mu_lower_slope(x1: f64, p: &PlantParams) -> f64 {
    let (slope_lo, slope_hi) = rho_slope_bounds(p);
    let rho_hi = x1 * slope_hi + p.rho_0;
    -2.0 * p.turns_sq() * slope_lo * slope_hi / (rho_hi * rho_hi * rho_hi)
}

pub fn envelopes(x1: f64, p: &PlantParams) -> EnvelopeTriple {
    let iv = |(lower, upper): (f64, f64)| Interval { lower, upper };
    EnvelopeTriple {
        x1,
        rho: iv(rho_bounds(x1, p)),
        inductance: iv(inductance_bounds(x1, p)),
        mu: iv(mu_bounds(x1, p)),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{self, FringingModel, SurfaceBounds, SurfaceVariant};

    fn with_fraction(frac: f64) -> PlantParams {
        let p = PlantParams::reference();
        let s = PlantParams::split_surface(p.rho_x, p.mu_0);
        p.with_fringing(FringingModel::constant(s, s, frac).unwrap())
    }

    #[test]
    fn zero_gap_collapses() {
        let p = PlantParams::reference();
        assert_eq!(rho_bounds(0.0, &p), (630.0, 630.0));
        let (l_lo, l_hi) = inductance_bounds(0.0, &p);
        assert_eq!(l_lo, 4900.0 / 630.0);
        assert_eq!(l_hi, 4900.0 / 630.0);
    }

    #[test]
    fn cross_wiring() {
        let p = PlantParams::reference();
        let b = p.fringing.bounds;
        let x = 0.002;
        let (rho_lo, rho_hi) = rho_bounds(x, &p);
        let lo = x / (p.mu_0 * b.upper(Gap::First)) + x / (p.mu_0 * b.upper(Gap::Third)) + p.rho_0;
        let hi = x / (p.mu_0 * b.lower(Gap::First)) + x / (p.mu_0 * b.lower(Gap::Third)) + p.rho_0;
        assert!(((rho_lo - lo) / lo).abs() < 1e-14);
        assert!(((rho_hi - hi) / hi).abs() < 1e-14);
        let (l_lo, l_hi) = inductance_bounds(x, &p);
        assert_eq!(l_lo, p.turns_sq() / rho_hi);
        assert_eq!(l_hi, p.turns_sq() / rho_lo);
    }

    #[test]
    fn ratio_tends_to_surface_ratio() {
        let p = PlantParams::reference();
        let s = PlantParams::split_surface(p.rho_x, p.mu_0);
        let b = SurfaceBounds { lower: [0.9 * s; 2], upper: [1.1 * s; 2] };
        let p =
            p.with_fringing(FringingModel::new(SurfaceVariant::Constant { s1: s, s3: s }, b, 0.005).unwrap());
        let (lo, hi) = rho_bounds(0.001, &p);
        assert!(lo < hi);
        let (lo, hi) = rho_bounds(1e3, &p);
        assert!((hi / lo - 1.1 / 0.9).abs() < 1e-9);
    }

    #[test]
    fn equal_bounds_collapse_to_model() {
        let p = with_fraction(0.0);
        for x in [0.0, 0.001, 0.0025] {
            let (lo, hi) = rho_bounds(x, &p);
            let rho = model::reluctance(x, &p);
            assert!(((lo - rho) / rho).abs() < 1e-14 && ((hi - rho) / rho).abs() < 1e-14);
            let (lo, hi) = inductance_bounds(x, &p);
            let l = model::inductance(x, &p);
            assert!(((lo - l) / l).abs() < 1e-14 && ((hi - l) / l).abs() < 1e-14);
            let (lo, hi) = mu_bounds(x, &p);
            let mu = model::mu_coefficient(x, &p);
            assert!(((lo - mu) / mu).abs() < 1e-13 && ((hi - mu) / mu).abs() < 1e-13);
        }
    }

    #[test]
    fn mu_envelope_straddles_nominal() {
        let p = with_fraction(0.1);
        let (lo, hi) = mu_bounds(0.001, &p);
        assert!(lo < 0.175 && 0.175 < hi, "[{lo}, {hi}]");
        let (lo0, hi0) = mu_bounds(0.0, &p);
        assert!(lo0 < hi0);
    }

    #[test]
    fn mu_upper_decreasing() {
        let p = PlantParams::reference();
        let grid: Vec<f64> = (0..=100).map(|i| 0.005 * i as f64 / 100.0).collect();
        for w in grid.windows(2) {
            assert!(mu_bounds(w[1], &p).1 < mu_bounds(w[0], &p).1);
        }
    }

    #[test]
    fn mu_lower_slope_matches_difference() {
        let p = PlantParams::reference();
        let x = 0.002;
        let h = 1e-9;
        let fd = (mu_bounds(x + h, &p).0 - mu_bounds(x - h, &p).0) / (2.0 * h);
        let an = mu_lower_slope(x, &p);
        assert!(((fd - an) / an).abs() < 1e-6);
    }
}
