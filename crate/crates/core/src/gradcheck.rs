//! Central finite-difference verification of every analytic gradient in the
//! crate. The checks are self-contained so both the CLI and the test suite
//! can run them; each reports its worst relative error against a fixed
//! tolerance.
//!
//! Relative error uses a floored denominator, |a − fd| / max(|a|, |fd|, 1e−2),
//! so components below the floor are effectively compared absolutely at 1e−8
//! scale — above the ~5e−9 rounding noise central differences carry at
//! h = 1e−6, and still far below any plausible gradient bug.

use rand::prelude::*;
use rand_chacha::ChaCha8Rng;

use crate::graph::{enumerate_edges, qualify_depth_edges, NeighborhoodSpec};
use crate::grid::{BoundingBox, DepthMap, Grid, LogitGrid};
use crate::loss::{edge_loss, edge_loss_gradient,edge_probability, AsymmetryConfig, EdgeLogits};
use crate::objective::{total_loss_and_gradient, InstanceInputs, ObjectiveConfig};
use crate::projection::{projection_loss, projection_loss_gradient, BoxProjections};

pub const FD_STEP: f64 = 1e-6;
pub const EDGE_TOLERANCE: f64 = 1e-6;
pub const COMPOSITE_TOLERANCE: f64 = 1e-5;

/// Outcome of one gradient check.
#[derive(Clone, Debug)]
pub struct CheckReport {
    pub name: &'static str,
    /// Random instances drawn.
    pub samples: usize,
    /// Individual gradient components compared.
    pub comparisons: usize,
    pub worst_rel_err: f64,
    pub tolerance: f64,
    pub failures: usize,
}

impl CheckReport {
    pub fn passed(&self) -> bool {
        self.failures == 0 && self.comparisons > 0
    }
}

impl std::fmt::Display for CheckReport {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "{}: {} samples, {} comparisons, worst rel err {:.3e} (tolerance {:.0e}) -> {}",
            self.name,
            self.samples,
            self.comparisons,
            self.worst_rel_err,
            self.tolerance,
            if self.passed() { "PASS" } else { "FAIL" }
        )
    }
}

#[inline]
fn rel_err(a: f64, fd: f64) -> f64 {
    (a - fd).abs() / a.abs().max(fd.abs()).max(1e-2)
}

/// Random edge-loss gradients against central differences.
pub fn check_edge_gradients(samples: usize, seed: u64) -> CheckReport {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut report = CheckReport {
        name: "edge_loss gradient",
        samples: 0,
        comparisons: 0,
        worst_rel_err: 0.0,
        tolerance: EDGE_TOLERANCE,
        failures: 0,
    };

    while report.samples < samples {
        let edge = EdgeLogits::new(rng.gen_range(-8.0..8.0), rng.gen_range(-8.0..8.0));
        let delta = rng.gen_range(0.0..3.5);
        let gamma = rng.gen_range(0.0..2.5);
        if edge_probability(edge, delta) <= 1e-6 {
            continue;
        }
        let cfg = AsymmetryConfig::new(delta, gamma).expect("sampled config in range");
        report.samples += 1;

        let (ga, gb) = edge_loss_gradient(edge, &cfg);
        let fd_a = {
            let plus = edge_loss(EdgeLogits::new(edge.a + FD_STEP, edge.b), &cfg);
            let minus = edge_loss(EdgeLogits::new(edge.a - FD_STEP, edge.b), &cfg);
            (plus - minus) / (2.0 * FD_STEP)
        };
        let fd_b = {
            let plus = edge_loss(EdgeLogits::new(edge.a, edge.b + FD_STEP), &cfg);
            let minus = edge_loss(EdgeLogits::new(edge.a, edge.b - FD_STEP), &cfg);
            (plus - minus) / (2.0 * FD_STEP)
        };
        for (analytic, numeric) in [(ga, fd_a), (gb, fd_b)] {
            let err = rel_err(analytic, numeric);
            report.comparisons += 1;
            report.worst_rel_err = report.worst_rel_err.max(err);
            if err >= report.tolerance {
                report.failures += 1;
            }
        }
    }
    report
}

fn random_mask(rng: &mut ChaCha8Rng, h: usize, w: usize) -> Grid<f64> {
    Grid::from_vec(h, w, (0..h * w).map(|_| rng.gen_range(0.02..0.98)).collect())
}

fn random_box(rng: &mut ChaCha8Rng, h: usize, w: usize) -> BoundingBox {
    let x0 = rng.gen_range(0..w - 1);
    let y0 = rng.gen_range(0..h - 1);
    BoundingBox {
        x0,
        y0,
        x1: rng.gen_range(x0 + 1..w),
        y1: rng.gen_range(y0 + 1..h),
    }
}

/// True when perturbing this entry by the finite-difference step cannot flip
/// a row/column argmax.
fn tie_free(mask: &Grid<f64>, row: usize, col: usize, gap: f64) -> bool {
    let (h, w) = (mask.height(), mask.width());
    let v = mask.at(row, col);
    let col_ok = (0..h)
        .filter(|&r| r != row)
        .all(|r| (v - mask.at(r, col)).abs() > gap);
    let row_ok = (0..w)
        .filter(|&c| c != col)
        .all(|c| (v - mask.at(row, c)).abs() > gap);
    col_ok && row_ok
}

/// Random projection-loss gradients (mask space) against central differences.
pub fn check_projection_gradients(samples: usize, seed: u64) -> CheckReport {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut report = CheckReport {
        name: "projection_loss gradient",
        samples,
        comparisons: 0,
        worst_rel_err: 0.0,
        tolerance: EDGE_TOLERANCE,
        failures: 0,
    };
    let (h, w) = (8, 8);

    for _ in 0..samples {
        let mask = random_mask(&mut rng, h, w);
        let boxes = [random_box(&mut rng, h, w)];
        let proj = BoxProjections::from_boxes(h, w, &boxes);
        let grad = projection_loss_gradient(&mask, &proj);

        for i in 0..mask.len() {
            let (row, col) = (i / w, i % w);
            if !tie_free(&mask, row, col, 1e-4) {
                continue;
            }
            let mut plus = mask.clone();
            plus.data_mut()[i] += FD_STEP;
            let mut minus = mask.clone();
            minus.data_mut()[i] -= FD_STEP;
            let fd = (projection_loss(&plus, &proj).unwrap()
                - projection_loss(&minus, &proj).unwrap())
                / (2.0 * FD_STEP);
            let err = rel_err(grad.data()[i], fd);
            report.comparisons += 1;
            report.worst_rel_err = report.worst_rel_err.max(err);
            if err >= report.tolerance {
                report.failures += 1;
            }
        }
    }
    report
}

/// Random composite-objective gradients (logit space) against central
/// differences, on small synthetic depth scenes.
pub fn check_composite_gradients(samples: usize, seed: u64) -> CheckReport {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut report = CheckReport {
        name: "total_loss gradient",
        samples,
        comparisons: 0,
        worst_rel_err: 0.0,
        tolerance: COMPOSITE_TOLERANCE,
        failures: 0,
    };
    let (h, w) = (8, 8);
    let edges = enumerate_edges(h, w, NeighborhoodSpec::default());

    for _ in 0..samples {
        // Two-plane depth so some edges qualify and some do not.
        let split = rng.gen_range(2..w - 2);
        let mut depths = DepthMap::filled(h, w, 5.0);
        for row in 0..h {
            for col in split..w {
                depths.values.set(row, col, 6.5);
            }
        }
        let boxes = [random_box(&mut rng, h, w)];
        let inputs = InstanceInputs {
            color_edges: None,
            depth_edges: Some(qualify_depth_edges(&edges, &depths, 0.01, &boxes)),
            projections: BoxProjections::from_boxes(h, w, &boxes),
        };
        let mut cfg = ObjectiveConfig::default();
        cfg.enable_color = false;
        cfg.warmup_steps = 0;
        cfg.depth.delta = rng.gen_range(0.0..3.5);
        cfg.depth.gamma = rng.gen_range(0.0..2.5);
        cfg.depth.lambda = rng.gen_range(0.05..0.6);

        let logits = LogitGrid(Grid::from_vec(
            h,
            w,
            (0..h * w).map(|_| rng.gen_range(-2.5..2.5)).collect(),
        ));
        let (_, grad) = total_loss_and_gradient(&logits, &inputs, &cfg, 10).unwrap();
        let mask = logits.probabilities();

        for i in 0..logits.0.len() {
            let (row, col) = (i / w, i % w);
            if !tie_free(&mask, row, col, 1e-4) {
                continue;
            }
            let mut plus = logits.clone();
            plus.0.data_mut()[i] += FD_STEP;
            let mut minus = logits.clone();
            minus.0.data_mut()[i] -= FD_STEP;
            let (tp, _) = total_loss_and_gradient(&plus, &inputs, &cfg, 10).unwrap();
            let (tm, _) = total_loss_and_gradient(&minus, &inputs, &cfg, 10).unwrap();
            let fd = (tp.total - tm.total) / (2.0 * FD_STEP);
            let err = rel_err(grad.data()[i], fd);
            report.comparisons += 1;
            report.worst_rel_err = report.worst_rel_err.max(err);
            if err >= report.tolerance {
                report.failures += 1;
            }
        }
    }
    report
}

/// The full oracle suite at the acceptance sample counts.
pub fn run_full_suite(samples: usize, seed: u64) -> Vec<CheckReport> {
    vec![
        check_edge_gradients(samples, seed),
        check_projection_gradients(samples, seed.wrapping_add(1)),
        check_composite_gradients(samples, seed.wrapping_add(2)),
    ]
}
