//! Sampling the two-pixel loss surface over probability space. The axes are
//! the unshifted foreground probabilities σ(y_a), σ(y_b); the loss at a node
//! is evaluated by inverting the sigmoid. Two one-dimensional cross-sections
//! matter: the main diagonal σ(y_a) = σ(y_b), and the anti-diagonal through
//! the stationary point (δ, δ) in logit space, which sweeps the pair
//! probability below 0.5 and is where extra stationary points of an
//! over-modulated loss show up as extra local minima.

use crate::error::{Error, Result};
use crate::grid::logit;
use crate::loss::{edge_loss, AsymmetryConfig, EdgeLogits};

/// Probability clip applied to the sampling axes; the logit inversion
/// diverges at exact 0 and 1.
pub const AXIS_CLIP: f64 = 1e-4;

/// A sampled loss surface over (σ(y_a), σ(y_b)).
#[derive(Clone, Debug)]
pub struct LandscapeSample {
    pub config: AsymmetryConfig,
    pub resolution: usize,
    /// Shared axis values, strictly inside (0, 1).
    pub axis: Vec<f64>,
    /// Loss values, row-major: `values[ib * resolution + ia]` pairs
    /// `axis[ia]` on the first endpoint with `axis[ib]` on the second.
    pub values: Vec<f64>,
}

impl LandscapeSample {
    #[inline]
    pub fn value(&self, ia: usize, ib: usize) -> f64 {
        self.values[ib * self.resolution + ia]
    }
}

fn axis_values(resolution: usize) -> Vec<f64> {
    let lo = AXIS_CLIP;
    let hi = 1.0 - AXIS_CLIP;
    (0..resolution)
        .map(|i| lo + (hi - lo) * i as f64 / (resolution - 1) as f64)
        .collect()
}

/// Evaluate the edge loss on a resolution × resolution probability grid.
/// Accepts diagnostic configs with γ ≥ e.
pub fn sample_surface(cfg: &AsymmetryConfig, resolution: usize) -> Result<LandscapeSample> {
    if resolution < 16 {
        return Err(Error::InvalidConfig(format!(
            "landscape resolution must be >= 16, got {resolution}"
        )));
    }
    let axis = axis_values(resolution);
    let logits: Vec<f64> = axis.iter().map(|&x| logit(x)).collect();
    let mut values = Vec::with_capacity(resolution * resolution);
    for &yb in &logits {
        for &ya in &logits {
            values.push(edge_loss(EdgeLogits::new(ya, yb), cfg));
        }
    }
    Ok(LandscapeSample {
        config: *cfg,
        resolution,
        axis,
        values,
    })
}

/// The surface restricted to σ(y_a) = σ(y_b), as (probability, loss) pairs.
pub fn diagonal_cross_section(sample: &LandscapeSample) -> Vec<(f64, f64)> {
    (0..sample.resolution)
        .map(|i| (sample.axis[i], sample.value(i, i)))
        .collect()
}

/// The loss along the anti-diagonal through (δ, δ) in logit space, i.e.
/// y_a = δ + s, y_b = δ − s, parameterized by the offset probability
/// t = σ(s). The pair probability there is 2t(1−t) ∈ (0, 0.5], the branch
/// where the γ-bound analysis places its roots.
pub fn offset_antidiagonal_cross_section(
    cfg: &AsymmetryConfig,
    resolution: usize,
) -> Result<Vec<(f64, f64)>> {
    if resolution < 16 {
        return Err(Error::InvalidConfig(format!(
            "cross-section resolution must be >= 16, got {resolution}"
        )));
    }
    let delta = cfg.delta();
    Ok(axis_values(resolution)
        .into_iter()
        .map(|t| {
            let s = logit(t);
            let loss = edge_loss(EdgeLogits::new(delta + s, delta - s), cfg);
            (t, loss)
        })
        .collect())
}

/// Count strict interior local minima of a curve. Plateau-aware: a flat run
/// flanked on both sides by strictly larger values counts once; runs touching
/// either end never count.
pub fn count_local_minima(values: &[f64]) -> usize {
    if values.len() < 3 {
        return 0;
    }
    let mut count = 0;
    let mut i = 0;
    while i < values.len() {
        let mut j = i;
        while j + 1 < values.len() && values[j + 1] == values[i] {
            j += 1;
        }
        // Run [i, j] of equal values.
        if i > 0 && j + 1 < values.len() && values[i - 1] > values[i] && values[j + 1] > values[i] {
            count += 1;
        }
        i = j + 1;
    }
    count
}
