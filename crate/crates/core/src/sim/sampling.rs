use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::model::{FringingModel, Gap, PiecewiseSurface, SurfaceBounds, SurfaceVariant};
use crate::Result;

/// Knots per gap in a random realization.
pub const REALIZATION_KNOTS: usize = 8;

/// Draw `n` random fringing realizations.
///
/// Each gap gets a piecewise-linear incremental surface on
/// [`REALIZATION_KNOTS`] evenly spaced knots over `[0, stroke]`, with knot
/// values uniform in `[S̲_i, S̄_i]`. The effective surface is a weighted
/// harmonic mean of the incremental one, so both stay inside the bounds.
/// The same `seed` always yields the same list.
pub fn sample_fringing(
    seed: u64,
    bounds: &SurfaceBounds,
    stroke: f64,
    n: usize,
) -> Result<Vec<FringingModel>> {
    bounds.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let span = if stroke > 0.0 { stroke } else { 1e-3 };
    let knots: Vec<f64> =
        (0..REALIZATION_KNOTS).map(|k| span * k as f64 / (REALIZATION_KNOTS - 1) as f64).collect();
    let draw_gap = |rng: &mut ChaCha8Rng, gap: Gap| -> Result<PiecewiseSurface> {
        let (lo, hi) = (bounds.lower(gap), bounds.upper(gap));
        let values = knots.iter().map(|_| if hi > lo { rng.random_range(lo..=hi) } else { lo }).collect();
        PiecewiseSurface::new(knots.clone(), values)
    };
    (0..n)
        .map(|_| {
            let gap1 = draw_gap(&mut rng, Gap::First)?;
            let gap3 = draw_gap(&mut rng, Gap::Third)?;
            FringingModel::new(SurfaceVariant::Piecewise { gap1, gap3 }, *bounds, stroke)
        })
        .collect()
}
