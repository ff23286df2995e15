//! Box supervision through axis projections: the probability mask is
//! max-projected onto each axis and compared against the box indicator
//! projections with a Dice loss. The Dice form keeps the printed
//! normalization l·g / (|l|² + |g|²), so a perfect match scores 0.5 per axis
//! rather than 0; the gradient signs are unaffected.

use crate::error::{Error, Result};
use crate::grid::{BoundingBox, Grid, ProbMask};

/// Denominator guard used only on the optimizer path, where an error would
/// abort a whole run for an input that cannot occur with masks in (0, 1).
const DICE_DENOM_FLOOR: f64 = 1e-6;

/// Ground-truth axis projections of a box union: 0/1 vectors over columns
/// (`lx`) and rows (`ly`).
#[derive(Clone, Debug, PartialEq)]
pub struct BoxProjections {
    pub lx: Vec<f64>,
    pub ly: Vec<f64>,
}

impl BoxProjections {
    pub fn from_boxes(height: usize, width: usize, boxes: &[BoundingBox]) -> Self {
        let mut lx = vec![0.0; width];
        let mut ly = vec![0.0; height];
        for b in boxes {
            for x in lx.iter_mut().take(b.x1.min(width - 1) + 1).skip(b.x0) {
                *x = 1.0;
            }
            for y in ly.iter_mut().take(b.y1.min(height - 1) + 1).skip(b.y0) {
                *y = 1.0;
            }
        }
        BoxProjections { lx, ly }
    }
}

/// Max-project a mask onto both axes: `lx[c]` is the column maximum, `ly[r]`
/// the row maximum.
pub fn project(mask: &ProbMask) -> (Vec<f64>, Vec<f64>) {
    let (h, w) = (mask.height(), mask.width());
    let mut lx = vec![f64::NEG_INFINITY; w];
    let mut ly = vec![f64::NEG_INFINITY; h];
    for (row, col, &v) in mask.iter() {
        if v > lx[col] {
            lx[col] = v;
        }
        if v > ly[row] {
            ly[row] = v;
        }
    }
    (lx, ly)
}

/// Index of the first maximum of each column and of each row; first index
/// wins ties so the max subgradient has a deterministic route.
fn argmax_by_axis(mask: &ProbMask) -> (Vec<usize>, Vec<usize>) {
    let (h, w) = (mask.height(), mask.width());
    let mut col_arg = vec![0usize; w];
    let mut col_max = vec![f64::NEG_INFINITY; w];
    let mut row_arg = vec![0usize; h];
    let mut row_max = vec![f64::NEG_INFINITY; h];
    for (row, col, &v) in mask.iter() {
        if v > col_max[col] {
            col_max[col] = v;
            col_arg[col] = row;
        }
        if v > row_max[row] {
            row_max[row] = v;
            row_arg[row] = col;
        }
    }
    (col_arg, row_arg)
}

/// Dice loss 1 − (l·g)/(|l|² + |g|²), exactly as printed (no factor 2, no
/// smoothing). Errors when both vectors are all-zero.
pub fn dice(l: &[f64], g: &[f64]) -> Result<f64> {
    assert_eq!(l.len(), g.len(), "dice inputs must have equal length");
    let mut dot = 0.0;
    let mut denom = 0.0;
    for (&a, &b) in l.iter().zip(g) {
        dot += a * b;
        denom += a * a + b * b;
    }
    if denom == 0.0 {
        return Err(Error::DegenerateDice);
    }
    Ok(1.0 - dot / denom)
}

/// Sum of the two axis Dice losses against the box projections.
pub fn projection_loss(mask: &ProbMask, boxes: &BoxProjections) -> Result<f64> {
    let (lx, ly) = project(mask);
    Ok(dice(&lx, &boxes.lx)? + dice(&ly, &boxes.ly)?)
}

/// Gradient of one axis Dice term with respect to its projection vector:
/// (2·(l·g)·l_k − (|l|²+|g|²)·g_k) / (|l|²+|g|²)².
///
/// The sign splits on the ground-truth entry: non-positive where g_k = 1,
/// non-negative where g_k = 0. Routing through the max subgradient cannot
/// flip it, so pixels strictly inside the box (both projections 1) only ever
/// receive non-positive projection gradient.
pub fn dice_gradient(l: &[f64], g: &[f64]) -> Vec<f64> {
    let mut dot = 0.0;
    let mut denom = 0.0;
    for (&a, &b) in l.iter().zip(g) {
        dot += a * b;
        denom += a * a + b * b;
    }
    let denom = denom.max(DICE_DENOM_FLOOR);
    let inv_sq = 1.0 / (denom * denom);
    l.iter()
        .zip(g)
        .map(|(&a, &b)| (2.0 * dot * a - denom * b) * inv_sq)
        .collect()
}

/// Analytic gradient of [`projection_loss`] with respect to the mask entries.
/// The max subgradient is routed entirely to the first-index argmax of each
/// row and column, so at most H + W entries are nonzero.
pub fn projection_loss_gradient(mask: &ProbMask, boxes: &BoxProjections) -> Grid<f64> {
    let (lx, ly) = project(mask);
    let (col_arg, row_arg) = argmax_by_axis(mask);
    let gx = dice_gradient(&lx, &boxes.lx);
    let gy = dice_gradient(&ly, &boxes.ly);

    let mut grad = Grid::filled(mask.height(), mask.width(), 0.0);
    for (col, &row) in col_arg.iter().enumerate() {
        let i = grad.idx(row, col);
        grad.data_mut()[i] += gx[col];
    }
    for (row, &col) in row_arg.iter().enumerate() {
        let i = grad.idx(row, col);
        grad.data_mut()[i] += gy[row];
    }
    grad
}
