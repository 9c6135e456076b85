use serde::{Deserialize, Serialize};

use super::ControllerGains;
use crate::model::PlantParams;

/// Outcome of the outer-loop gain check.
///
/// `alpha` is the magnitude of the eigenvalue of `Q` closest to zero, which
/// is what the bound `zᵀQz ≤ λ_max(Q)‖z‖²` needs. `alpha_literal` is the
/// magnitude of the most negative eigenvalue, kept for comparison; its
/// radius is smaller and is not a valid ultimate bound in general.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GainCertificate {
    /// `1 − α1² + (λ/m) α1 − K/m`
    pub a: f64,
    /// `α1 − λ/m`
    pub b: f64,
    /// `[[−α1, a/2], [a/2, b − α2]]`
    pub q: [[f64; 2]; 2],
    /// Eigenvalues of `q`, ascending.
    pub eigenvalues: [f64; 2],
    pub negative_definite: bool,
    /// `α2 > |b|`
    pub alpha2_dominates_b: bool,
    pub alpha: f64,
    pub alpha_literal: f64,
    /// `(K/m)·|y_r|max`
    pub delta: f64,
    pub theta: f64,
    /// `δ/(α θ)`
    pub radius: f64,
    /// `δ/(α_literal θ)`
    pub radius_literal: f64,
}

impl GainCertificate {
    pub fn certified(&self) -> bool {
        self.negative_definite
    }

    pub fn determinant(&self) -> f64 {
        self.q[0][0] * self.q[1][1] - self.q[0][1] * self.q[1][0]
    }
}

/// Eigenvalues of a symmetric 2×2 matrix, ascending.
///
/// The larger-magnitude root comes from the quadratic formula without
/// cancellation; the other from `det / λ`.
pub fn symmetric_eigenvalues(q: [[f64; 2]; 2]) -> [f64; 2] {
    let (p, r, s) = (q[0][0], q[0][1], q[1][1]);
    let mean = 0.5 * (p + s);
    let half_gap = (0.5 * (p - s)).hypot(r);
    let det = p * s - r * r;
    let big = if mean >= 0.0 { mean + half_gap } else { mean - half_gap };
    let small = if big != 0.0 { det / big } else { 0.0 };
    if big <= small {
        [big, small]
    } else {
        [small, big]
    }
}

pub fn certify_gains(g: &ControllerGains, p: &PlantParams, y_r_max: f64) -> GainCertificate {
    let (a1, a2) = (g.alpha1, g.alpha2);
    let fm = p.friction / p.mass;
    let km = p.spring / p.mass;
    let a = 1.0 - a1 * a1 + fm * a1 - km;
    let b = a1 - fm;
    let q = [[-a1, 0.5 * a], [0.5 * a, b - a2]];
    let eigenvalues = symmetric_eigenvalues(q);
    let negative_definite = eigenvalues[1] < 0.0;
    let alpha = eigenvalues[1].abs();
    let alpha_literal = eigenvalues[0].abs();
    let delta = km * y_r_max.abs();
    GainCertificate {
        a,
        b,
        q,
        eigenvalues,
        negative_definite,
        alpha2_dominates_b: a2 > b.abs(),
        alpha,
        alpha_literal,
        delta,
        theta: g.theta,
        radius: delta / (alpha * g.theta),
        radius_literal: delta / (alpha_literal * g.theta),
    }
}
