//! Independent oracles and generators shared by the integration tests.
#![allow(dead_code)]

use ema_core::model::{FringingModel, PlantParams, SurfaceBounds, SurfaceVariant};
use ema_core::sim::sample_fringing;

pub const STROKE: f64 = 0.005;

/// Root of `f` in `[lo, hi]` by bisection; `f(lo)` and `f(hi)` must differ
/// in sign.
pub fn bisect(f: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64) -> f64 {
    let f_lo = f(lo);
    assert!(f_lo * f(hi) <= 0.0, "no sign change on [{lo}, {hi}]");
    loop {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            return mid;
        }
        if (f(mid) > 0.0) == (f_lo > 0.0) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
}

/// Eigenvalues of a symmetric 2×2 matrix, ascending, by bisection on the
/// characteristic polynomial on either side of its vertex.
pub fn brute_eigenvalues(q: [[f64; 2]; 2]) -> [f64; 2] {
    let tr = q[0][0] + q[1][1];
    let det = q[0][0] * q[1][1] - q[0][1] * q[1][0];
    let p = |l: f64| l * l - tr * l + det;
    let r = (q[0][0].abs() + q[0][1].abs()).max(q[1][1].abs() + q[1][0].abs()) + 1.0;
    let vertex = 0.5 * tr;
    if p(vertex) >= 0.0 {
        return [vertex, vertex];
    }
    [bisect(p, -r, vertex), bisect(p, vertex, r)]
}

/// Closed-form position of `ẍ = −k x − c ẋ` (underdamped) at time `t`.
pub fn damped_oscillator(x0: f64, v0: f64, k: f64, c: f64, t: f64) -> f64 {
    let sigma = 0.5 * c;
    let wd = (k - sigma * sigma).sqrt();
    (-sigma * t).exp() * (x0 * (wd * t).cos() + (v0 + sigma * x0) / wd * (wd * t).sin())
}

pub fn reference_with(fringing: FringingModel) -> PlantParams {
    PlantParams { stroke: STROKE, ..PlantParams::reference() }.with_fringing(fringing)
}

/// One model of each surface variant, with bounds that admit it.
pub fn all_variants() -> Vec<(&'static str, FringingModel)> {
    let s = PlantParams::split_surface(2.8e10, ema_core::model::MU_0);
    let constant = FringingModel::constant(s, 0.8 * s, 0.2).unwrap();
    let weighted = FringingModel::new(
        SurfaceVariant::Weighted { alpha1: 1.2, alpha3: 1.1, s_cm1: 1e-4, s_cm3: 1.2e-4 },
        SurfaceBounds::relative([1.2e-4, 1.32e-4], 0.1).unwrap(),
        STROKE,
    )
    .unwrap();
    let geometric = FringingModel::new(
        SurfaceVariant::Geometric { a1: 0.01, b1: 0.01, a3: 0.012, b3: 0.01 },
        SurfaceBounds { lower: [9e-5, 1.1e-4], upper: [7e-4, 7e-4] },
        STROKE,
    )
    .unwrap();
    let bounds = SurfaceBounds::relative([s, s], 0.2).unwrap();
    let piecewise = sample_fringing(7, &bounds, STROKE, 1).unwrap().remove(0);
    vec![("constant", constant), ("weighted", weighted), ("geometric", geometric), ("piecewise", piecewise)]
}

/// `−dL/dx1` by central difference. The step is 1e-9 m, shrunk near zero
/// airgap so it stays small against the reluctance length scale `ρ/ρ'`.
pub fn inductance_slope_fd(x: f64, p: &PlantParams) -> f64 {
    let scale = ema_core::model::reluctance(x, p) / ema_core::bounds::rho_slope_bounds(p).1;
    let h = (1e-4 * scale).min(1e-9);
    -(ema_core::model::inductance(x + h, p) - ema_core::model::inductance(x - h, p)) / (2.0 * h)
}
