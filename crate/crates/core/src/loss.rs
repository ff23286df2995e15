//! Closed-form pairwise edge loss: the label-agreement probability of a pixel
//! pair, its offset/modulated asymmetric variant, analytic gradients with
//! respect to the raw logits, and the smoothness-bound analysis that explains
//! why the modulation factor must stay below e.
//!
//! For endpoint logits (y_a, y_b), offset δ and modulation γ:
//!
//! ```text
//! P(y_a, y_b; δ) = σ(y_a−δ)·σ(y_b−δ) + σ(δ−y_a)·σ(δ−y_b)
//! loss           = exp(γ·(P−0.5)) · (−ln P)
//! ```
//!
//! δ = 0, γ = 0 recovers the plain symmetric pairwise loss −ln P.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{sigmoid, sigmoid_deriv};

/// Floor applied to P before taking the log. Saturated probabilities can
/// underflow in float arithmetic even though P is strictly positive on paper.
pub const PROBABILITY_FLOOR: f64 = 1e-12;

/// Logits of the two endpoints of an affinity edge.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EdgeLogits {
    pub a: f64,
    pub b: f64,
}

impl EdgeLogits {
    pub fn new(a: f64, b: f64) -> Self {
        EdgeLogits { a, b }
    }

    pub fn swapped(self) -> Self {
        EdgeLogits {
            a: self.b,
            b: self.a,
        }
    }
}

/// Offset and modulation of the asymmetric edge loss.
///
/// `delta ≥ 0` shifts the basin boundary so pairs prefer the double-negative
/// side; `gamma ∈ [0, e)` sharpens the plateau that a large offset creates.
/// γ = 0 keeps the unmodulated loss. Construction rejects γ ≥ e, above which
/// the loss picks up extra stationary points (see [`analyze_gamma`]).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AsymmetryConfig {
    delta: f64,
    gamma: f64,
}

impl AsymmetryConfig {
    pub fn new(delta: f64, gamma: f64) -> Result<Self> {
        if !delta.is_finite() || delta < 0.0 {
            return Err(Error::InvalidConfig(format!(
                "delta must be finite and >= 0, got {delta}"
            )));
        }
        if !gamma.is_finite() || gamma < 0.0 || gamma >= std::f64::consts::E {
            return Err(Error::InvalidConfig(format!(
                "gamma must lie in [0, e), got {gamma}"
            )));
        }
        Ok(AsymmetryConfig { delta, gamma })
    }

    /// Plain symmetric loss: δ = 0, γ = 0.
    pub fn symmetric() -> Self {
        AsymmetryConfig {
            delta: 0.0,
            gamma: 0.0,
        }
    }

    /// Bypasses the γ < e bound for landscape diagnostics. The optimizer path
    /// always goes through [`AsymmetryConfig::new`].
    pub fn diagnostic(delta: f64, gamma: f64) -> Self {
        AsymmetryConfig { delta, gamma }
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }
}

/// Probability that both endpoints carry the same label, with offset δ.
///
/// Strictly inside (0, 1) for finite inputs and symmetric under swapping the
/// endpoints.
#[inline]
pub fn edge_probability(edge: EdgeLogits, delta: f64) -> f64 {
    let pa = sigmoid(edge.a - delta);
    let pb = sigmoid(edge.b - delta);
    let na = sigmoid(delta - edge.a);
    let nb = sigmoid(delta - edge.b);
    pa * pb + na * nb
}

/// Per-edge asymmetric affinity loss, `exp(γ(P−0.5))·(−ln P)` with P floored
/// at [`PROBABILITY_FLOOR`] before the log.
#[inline]
pub fn edge_loss(edge: EdgeLogits, cfg: &AsymmetryConfig) -> f64 {
    let p = edge_probability(edge, cfg.delta);
    let p_safe = p.max(PROBABILITY_FLOOR);
    (cfg.gamma * (p - 0.5)).exp() * (-p_safe.ln())
}

/// Analytic gradient of [`edge_loss`] with respect to the two raw logits.
///
/// With m = exp(γ(P−0.5)):
///
/// ```text
/// ∂L/∂P   = γ·m·(−ln P) − m/P
/// ∂P/∂y_a = σ'(y_a−δ)·(2σ(y_b−δ) − 1)
/// ```
///
/// Below the probability floor the log term is constant, so only the
/// modulation factor keeps a derivative.
pub fn edge_loss_gradient(edge: EdgeLogits, cfg: &AsymmetryConfig) -> (f64, f64) {
    let pa = sigmoid(edge.a - cfg.delta);
    let pb = sigmoid(edge.b - cfg.delta);
    let p = pa * pb + (1.0 - pa) * (1.0 - pb);
    let p_safe = p.max(PROBABILITY_FLOOR);

    let modulation = (cfg.gamma * (p - 0.5)).exp();
    let mut dl_dp = cfg.gamma * modulation * (-p_safe.ln());
    if p > PROBABILITY_FLOOR {
        dl_dp -= modulation / p_safe;
    }

    let dp_da = sigmoid_deriv(edge.a - cfg.delta) * (2.0 * pb - 1.0);
    let dp_db = sigmoid_deriv(edge.b - cfg.delta) * (2.0 * pa - 1.0);
    (dl_dp * dp_da, dl_dp * dp_db)
}

/// The stationarity indicator f(P) = 1/P + γ·ln P whose sign pattern decides
/// whether the loss has stationary points away from the P-gradient zero lines.
pub fn f_of_p(p: f64, gamma: f64) -> Result<f64> {
    if !(p > 0.0) {
        return Err(Error::InvalidConfig(format!(
            "f_of_p requires p > 0, got {p}"
        )));
    }
    Ok(1.0 / p + gamma * p.ln())
}

/// Result of scanning f(P) = 1/P + γ·ln P over (0, 1].
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GammaAnalysis {
    pub gamma: f64,
    /// Minimizer of f over (0, 1]: min(1, 1/γ).
    pub argmin_p: f64,
    /// f evaluated at `argmin_p`.
    pub min_value: f64,
    /// True when f attains a non-positive value on (0, 1], i.e. the loss has
    /// stationary points beyond the intended one.
    pub has_extra_stationary_points: bool,
}

/// Scan f(P) over a dense grid on (0, 1] and report its minimum structure.
///
/// The closed-form minimizer is 1/γ with value γ(1−ln γ); when 1/γ falls
/// outside (0, 1] the minimum sits at the boundary P = 1. The grid scan
/// (step 1e−4) independently checks for non-positive values.
pub fn analyze_gamma(gamma: f64) -> Result<GammaAnalysis> {
    if !(gamma > 0.0) || !gamma.is_finite() {
        return Err(Error::InvalidConfig(format!(
            "analyze_gamma requires gamma > 0, got {gamma}"
        )));
    }

    const STEP: f64 = 1e-4;
    let n = (1.0 / STEP) as usize;
    let mut scan_nonpositive = false;
    for i in 1..=n {
        let p = i as f64 * STEP;
        let f = 1.0 / p + gamma * p.ln();
        if f <= 0.0 {
            scan_nonpositive = true;
            break;
        }
    }

    let argmin_p = (1.0 / gamma).min(1.0);
    let min_value = if gamma >= 1.0 {
        gamma * (1.0 - gamma.ln())
    } else {
        // f is decreasing on (0, 1] for γ < 1, so the boundary wins: f(1) = 1.
        1.0
    };

    Ok(GammaAnalysis {
        gamma,
        argmin_p,
        min_value,
        has_extra_stationary_points: scan_nonpositive || min_value <= 0.0,
    })
}

/// Mean of per-edge losses; 0 for an empty set (the normalization is
/// undefined at N = 0, so the empty sum contributes nothing).
pub fn reduce_edge_losses(losses: &[f64]) -> f64 {
    if losses.is_empty() {
        return 0.0;
    }
    losses.iter().sum::<f64>() / losses.len() as f64
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::logit;
    use proptest::prelude::*;

    fn finite_diff_edge(edge: EdgeLogits, cfg: &AsymmetryConfig, h: f64) -> (f64, f64) {
        let fa = |a: f64| edge_loss(EdgeLogits::new(a, edge.b), cfg);
        let fb = |b: f64| edge_loss(EdgeLogits::new(edge.a, b), cfg);
        (
            (fa(edge.a + h) - fa(edge.a - h)) / (2.0 * h),
            (fb(edge.b + h) - fb(edge.b - h)) / (2.0 * h),
        )
    }

    fn rel_err(a: f64, b: f64) -> f64 {
        (a - b).abs() / a.abs().max(b.abs()).max(1e-2)
    }

    #[test]
    fn probability_at_origin() {
        assert_eq!(edge_probability(EdgeLogits::new(0.0, 0.0), 0.0), 0.5);
    }

    #[test]
    fn probability_at_offset_center_is_half() {
        for delta in [0.0, 1.5, 2.5, 3.5] {
            let p = edge_probability(EdgeLogits::new(delta, delta), delta);
            assert!((p - 0.5).abs() < 1e-15, "delta={delta} gave {p}");
        }
    }

    #[test]
    fn probability_high_logits() {
        // σ(10)² + σ(−10)² evaluated independently.
        let s = sigmoid(10.0);
        let expected = s * s + (1.0 - s) * (1.0 - s);
        let p = edge_probability(EdgeLogits::new(10.0, 10.0), 0.0);
        assert_eq!(p, expected);
        assert!((p - 0.9999092083845281).abs() < 1e-12);
    }

    #[test]
    fn loss_at_center_is_ln2() {
        for (delta, gamma) in [(0.0, 0.0), (2.5, 1.5), (3.5, 2.5)] {
            let cfg = AsymmetryConfig::new(delta, gamma).unwrap();
            let l = edge_loss(EdgeLogits::new(delta, delta), &cfg);
            assert!(
                (l - std::f64::consts::LN_2).abs() < 1e-12,
                "({delta},{gamma}) gave {l}"
            );
        }
    }

    #[test]
    fn double_negative_is_cheaper_under_offset() {
        let cfg = AsymmetryConfig::new(2.5, 1.5).unwrap();
        let neg = edge_loss(EdgeLogits::new(-3.0, -3.0), &cfg);
        let pos = edge_loss(EdgeLogits::new(3.0, 3.0), &cfg);
        assert!(neg < pos, "expected {neg} < {pos}");
    }

    #[test]
    fn gradient_vanishes_at_offset_center() {
        for delta in [0.0, 1.5, 2.5, 3.5] {
            for gamma in [0.0, 1.5, 2.5] {
                let cfg = AsymmetryConfig::new(delta, gamma).unwrap();
                let (ga, gb) = edge_loss_gradient(EdgeLogits::new(delta, delta), &cfg);
                assert!(ga.abs() < 1e-12 && gb.abs() < 1e-12);
            }
        }
    }

    #[test]
    fn gradient_negation_antisymmetry_without_offset() {
        let cfg = AsymmetryConfig::symmetric();
        for (a, b) in [(0.3, -1.2), (2.0, 0.7), (-0.5, -0.9)] {
            let (ga, gb) = edge_loss_gradient(EdgeLogits::new(a, b), &cfg);
            let (na, nb) = edge_loss_gradient(EdgeLogits::new(-a, -b), &cfg);
            assert!((ga + na).abs() < 1e-14);
            assert!((gb + nb).abs() < 1e-14);
        }
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let mut worst = 0.0f64;
        for i in 0..500 {
            // Deterministic pseudo-random sweep over the operating range.
            let t = i as f64;
            let a = -6.0 + 12.0 * ((t * 0.137).fract());
            let b = -6.0 + 12.0 * ((t * 0.359).fract());
            let delta = 3.5 * ((t * 0.731).fract());
            let gamma = 2.5 * ((t * 0.517).fract());
            let cfg = AsymmetryConfig::new(delta, gamma).unwrap();
            let edge = EdgeLogits::new(a, b);
            let (ga, gb) = edge_loss_gradient(edge, &cfg);
            let (fa, fb) = finite_diff_edge(edge, &cfg, 1e-6);
            worst = worst.max(rel_err(ga, fa)).max(rel_err(gb, fb));
        }
        assert!(worst < 1e-6, "worst relative error {worst}");
    }

    #[test]
    fn f_of_p_anchor_values() {
        assert_eq!(f_of_p(1.0, 3.3).unwrap(), 1.0);
        let gamma = 2.0 / std::f64::consts::LN_2;
        assert!(f_of_p(0.5, gamma).unwrap().abs() < 1e-12);
        assert!(f_of_p(0.0, 1.0).is_err());
        assert!(f_of_p(-0.1, 1.0).is_err());
    }

    #[test]
    fn analyze_gamma_verdicts() {
        let a = analyze_gamma(2.5).unwrap();
        let expected = 2.5 * (1.0 - 2.5f64.ln());
        assert!((a.min_value - expected).abs() < 1e-12);
        assert!(a.min_value > 0.0);
        assert!(!a.has_extra_stationary_points);
        assert!((a.argmin_p - 0.4).abs() < 1e-15);

        let boundary = analyze_gamma(std::f64::consts::E).unwrap();
        assert!(boundary.min_value.abs() < 1e-12);
        assert!(boundary.has_extra_stationary_points);

        let big = analyze_gamma(4.5).unwrap();
        assert!(big.min_value < 0.0);
        assert!(big.has_extra_stationary_points);

        let small = analyze_gamma(1.0).unwrap();
        assert_eq!(small.argmin_p, 1.0);
        assert_eq!(small.min_value, 1.0);
    }

    #[test]
    fn reduction_conventions() {
        assert_eq!(reduce_edge_losses(&[]), 0.0);
        let l2 = std::f64::consts::LN_2;
        assert!((reduce_edge_losses(&[l2, l2]) - l2).abs() < 1e-15);
    }

    #[test]
    fn reduction_matches_brute_force() {
        let values: Vec<f64> = (0..1000usize)
            .map(|i| (i.wrapping_mul(2654435761) % 997) as f64 / 997.0)
            .collect();
        let mut acc = 0.0;
        for &v in &values {
            acc += v;
        }
        let expected = acc / values.len() as f64;
        assert_eq!(reduce_edge_losses(&values), expected);
    }

    #[test]
    fn config_validation() {
        assert!(AsymmetryConfig::new(-0.1, 0.0).is_err());
        assert!(AsymmetryConfig::new(0.0, std::f64::consts::E).is_err());
        assert!(AsymmetryConfig::new(0.0, 5.0).is_err());
        assert!(AsymmetryConfig::new(0.0, 0.0).is_ok());
        assert!(AsymmetryConfig::new(3.5, 2.5).is_ok());
    }

    #[test]
    fn clamp_inactive_in_operating_range() {
        // Worst case inside |y| ≤ 20, δ ≤ 4: opposite saturated logits.
        let p = edge_probability(EdgeLogits::new(20.0, -20.0), 4.0);
        assert!(p > PROBABILITY_FLOOR);
        let p = edge_probability(EdgeLogits::new(-20.0, 20.0), 4.0);
        assert!(p > PROBABILITY_FLOOR);
    }

    #[test]
    fn unique_stationary_point_for_small_gamma() {
        // Scan sign changes of both partials over a probability grid. For
        // γ < e the only zero lines are σ(y−δ) = 0.5; for γ > e simultaneous
        // zeros appear away from them.
        fn simultaneous_interior_zeros(delta: f64, gamma: f64) -> usize {
            let cfg = AsymmetryConfig::diagnostic(delta, gamma);
            let n = 401usize;
            let grid: Vec<f64> = (0..n)
                .map(|i| 1e-4 + (1.0 - 2e-4) * i as f64 / (n - 1) as f64)
                .collect();
            let mut count = 0;
            for i in 0..n - 1 {
                for j in 0..n - 1 {
                    let y = |t: f64| logit(t);
                    let g00 = edge_loss_gradient(EdgeLogits::new(y(grid[i]), y(grid[j])), &cfg);
                    let g10 =
                        edge_loss_gradient(EdgeLogits::new(y(grid[i + 1]), y(grid[j])), &cfg);
                    let g01 =
                        edge_loss_gradient(EdgeLogits::new(y(grid[i]), y(grid[j + 1])), &cfg);
                    // Cell straddles the known zero lines?
                    let on_center_a = (grid[i] - sigmoid(delta)) * (grid[i + 1] - sigmoid(delta))
                        <= 0.0;
                    let on_center_b = (grid[j] - sigmoid(delta)) * (grid[j + 1] - sigmoid(delta))
                        <= 0.0;
                    if on_center_a || on_center_b {
                        continue;
                    }
                    if g00.0 * g10.0 < 0.0 && g00.1 * g01.1 < 0.0 {
                        count += 1;
                    }
                }
            }
            count
        }

        assert_eq!(simultaneous_interior_zeros(2.5, 1.5), 0);
        assert!(simultaneous_interior_zeros(3.0, 4.5) > 0);
    }

    proptest! {
        #[test]
        fn swap_symmetry(a in -8.0..8.0f64, b in -8.0..8.0f64,
                         delta in 0.0..3.5f64, gamma in 0.0..2.5f64) {
            let cfg = AsymmetryConfig::new(delta, gamma).unwrap();
            let edge = EdgeLogits::new(a, b);
            prop_assert_eq!(edge_loss(edge, &cfg), edge_loss(edge.swapped(), &cfg));
        }

        #[test]
        fn joint_negation_invariance_at_zero_offset(a in -8.0..8.0f64, b in -8.0..8.0f64,
                                                    gamma in 0.0..2.5f64) {
            let cfg = AsymmetryConfig::new(0.0, gamma).unwrap();
            let l1 = edge_loss(EdgeLogits::new(a, b), &cfg);
            let l2 = edge_loss(EdgeLogits::new(-a, -b), &cfg);
            prop_assert!((l1 - l2).abs() < 1e-12);
        }

        #[test]
        fn probability_strictly_inside_unit_interval(a in -30.0..30.0f64, b in -30.0..30.0f64,
                                                     delta in 0.0..4.0f64) {
            let p = edge_probability(EdgeLogits::new(a, b), delta);
            prop_assert!(p > 0.0 && p < 1.0);
        }

        #[test]
        fn loss_is_nonnegative(a in -20.0..20.0f64, b in -20.0..20.0f64,
                               delta in 0.0..3.5f64, gamma in 0.0..2.5f64) {
            let cfg = AsymmetryConfig::new(delta, gamma).unwrap();
            prop_assert!(edge_loss(EdgeLogits::new(a, b), &cfg) >= 0.0);
        }
    }

    #[test]
    fn asymmetry_grid() {
        // Double-negative pairs must cost no more than their mirrored
        // double-positive pairs once the offset is positive.
        let mut a_values = vec![];
        let mut x = 0.5;
        while x <= 6.0 + 1e-9 {
            a_values.push(x);
            x += 0.5;
        }
        for &a in &a_values {
            let mut delta = 0.5;
            while delta <= 3.5 + 1e-9 {
                for gamma in [0.0, 1.5, 2.5] {
                    let cfg = AsymmetryConfig::new(delta, gamma).unwrap();
                    let neg = edge_loss(EdgeLogits::new(-a, -a), &cfg);
                    let pos = edge_loss(EdgeLogits::new(a, a), &cfg);
                    assert!(
                        neg < pos,
                        "a={a} delta={delta} gamma={gamma}: {neg} !< {pos}"
                    );
                }
                delta += 0.5;
            }
        }
    }
}
