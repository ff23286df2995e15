//! Dense row-major grids and the small geometry types shared by every module:
//! logit grids, probability masks, depth maps and axis-aligned boxes.

use serde::{Deserialize, Serialize};

/// Dense H×W grid stored row-major.
#[derive(Clone, Debug, PartialEq)]
pub struct Grid<T> {
    height: usize,
    width: usize,
    data: Vec<T>,
}

impl<T: Clone> Grid<T> {
    pub fn filled(height: usize, width: usize, value: T) -> Self {
        Grid {
            height,
            width,
            data: vec![value; height * width],
        }
    }
}

impl<T> Grid<T> {
    pub fn from_vec(height: usize, width: usize, data: Vec<T>) -> Self {
        assert_eq!(data.len(), height * width, "grid data length mismatch");
        Grid {
            height,
            width,
            data,
        }
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    #[inline]
    pub fn idx(&self, row: usize, col: usize) -> usize {
        debug_assert!(row < self.height && col < self.width);
        row * self.width + col
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize) -> &T {
        &self.data[self.idx(row, col)]
    }

    #[inline]
    pub fn set(&mut self, row: usize, col: usize, value: T) {
        let i = self.idx(row, col);
        self.data[i] = value;
    }

    pub fn data(&self) -> &[T] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [T] {
        &mut self.data
    }

    /// (row, col, &value) in row-major order.
    pub fn iter(&self) -> impl Iterator<Item = (usize, usize, &T)> {
        let w = self.width;
        self.data
            .iter()
            .enumerate()
            .map(move |(i, v)| (i / w, i % w, v))
    }

    pub fn same_shape<U>(&self, other: &Grid<U>) -> bool {
        self.height == other.height && self.width == other.width
    }
}

impl<T: Copy> Grid<T> {
    #[inline]
    pub fn at(&self, row: usize, col: usize) -> T {
        self.data[self.idx(row, col)]
    }
}

/// Pixel position as (row, col).
pub type Pixel = (usize, usize);

/// Numerically stable logistic function.
#[inline]
pub fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// Derivative of the logistic function, σ(x)·(1−σ(x)).
#[inline]
pub fn sigmoid_deriv(x: f64) -> f64 {
    let s = sigmoid(x);
    s * (1.0 - s)
}

/// Inverse of the logistic function on (0, 1).
#[inline]
pub fn logit(p: f64) -> f64 {
    (p / (1.0 - p)).ln()
}

/// The free variables of the optimization: one real logit per pixel.
#[derive(Clone, Debug, PartialEq)]
pub struct LogitGrid(pub Grid<f64>);

impl LogitGrid {
    pub fn zeros(height: usize, width: usize) -> Self {
        LogitGrid(Grid::filled(height, width, 0.0))
    }

    pub fn height(&self) -> usize {
        self.0.height()
    }

    pub fn width(&self) -> usize {
        self.0.width()
    }

    /// Elementwise sigmoid of the logits.
    pub fn probabilities(&self) -> ProbMask {
        Grid::from_vec(
            self.0.height(),
            self.0.width(),
            self.0.data().iter().map(|&y| sigmoid(y)).collect(),
        )
    }
}

/// Probability score mask with entries in (0, 1).
pub type ProbMask = Grid<f64>;

/// Binary segmentation mask.
pub type BinaryMask = Grid<bool>;

/// Per-pixel depth in meters plus a validity mask. Invalid pixels carry no
/// depth value at all; they are never encoded as 0 or NaN meters.
#[derive(Clone, Debug, PartialEq)]
pub struct DepthMap {
    pub values: Grid<f64>,
    pub valid: Grid<bool>,
}

impl DepthMap {
    pub fn filled(height: usize, width: usize, depth: f64) -> Self {
        DepthMap {
            values: Grid::filled(height, width, depth),
            valid: Grid::filled(height, width, true),
        }
    }

    pub fn height(&self) -> usize {
        self.values.height()
    }

    pub fn width(&self) -> usize {
        self.values.width()
    }

    /// Depth at a pixel, or None when invalid.
    #[inline]
    pub fn get(&self, row: usize, col: usize) -> Option<f64> {
        if self.valid.at(row, col) {
            Some(self.values.at(row, col))
        } else {
            None
        }
    }
}

/// Tight axis-aligned bounding box with inclusive pixel bounds.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct BoundingBox {
    /// First column inside the box.
    pub x0: usize,
    /// First row inside the box.
    pub y0: usize,
    /// Last column inside the box.
    pub x1: usize,
    /// Last row inside the box.
    pub y1: usize,
}

impl BoundingBox {
    #[inline]
    pub fn contains(&self, pixel: Pixel) -> bool {
        let (row, col) = pixel;
        row >= self.y0 && row <= self.y1 && col >= self.x0 && col <= self.x1
    }

    pub fn width(&self) -> usize {
        self.x1 - self.x0 + 1
    }

    pub fn height(&self) -> usize {
        self.y1 - self.y0 + 1
    }

    pub fn area(&self) -> usize {
        self.width() * self.height()
    }

    /// Tight bounding box of the true pixels, or None for an empty mask.
    pub fn of_mask(mask: &BinaryMask) -> Option<BoundingBox> {
        let mut bounds: Option<BoundingBox> = None;
        for (row, col, &on) in mask.iter() {
            if !on {
                continue;
            }
            bounds = Some(match bounds {
                None => BoundingBox {
                    x0: col,
                    y0: row,
                    x1: col,
                    y1: row,
                },
                Some(b) => BoundingBox {
                    x0: b.x0.min(col),
                    y0: b.y0.min(row),
                    x1: b.x1.max(col),
                    y1: b.y1.max(row),
                },
            });
        }
        bounds
    }

    /// Binary indicator mask of the box on an H×W canvas.
    pub fn indicator(&self, height: usize, width: usize) -> BinaryMask {
        let mut mask = Grid::filled(height, width, false);
        for row in self.y0..=self.y1.min(height - 1) {
            for col in self.x0..=self.x1.min(width - 1) {
                mask.set(row, col, true);
            }
        }
        mask
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_row_major_indexing() {
        let g = Grid::from_vec(2, 3, vec![0, 1, 2, 3, 4, 5]);
        assert_eq!(g.at(0, 2), 2);
        assert_eq!(g.at(1, 0), 3);
        let coords: Vec<_> = g.iter().map(|(r, c, _)| (r, c)).collect();
        assert_eq!(coords[4], (1, 1));
    }

    #[test]
    fn sigmoid_basics() {
        assert_eq!(sigmoid(0.0), 0.5);
        assert!((sigmoid(10.0) - 0.9999546021312976).abs() < 1e-15);
        assert!(sigmoid(-745.0) > 0.0);
        let p = 0.73;
        assert!((sigmoid(logit(p)) - p).abs() < 1e-15);
    }

    #[test]
    fn bounding_box_of_mask_is_tight() {
        let mut mask = Grid::filled(5, 5, false);
        mask.set(1, 2, true);
        mask.set(3, 4, true);
        let b = BoundingBox::of_mask(&mask).unwrap();
        assert_eq!(
            b,
            BoundingBox {
                x0: 2,
                y0: 1,
                x1: 4,
                y1: 3
            }
        );
        assert_eq!(b.area(), 9);
        assert!(b.contains((2, 3)));
        assert!(!b.contains((0, 2)));
    }

    #[test]
    fn empty_mask_has_no_box() {
        let mask: BinaryMask = Grid::filled(3, 3, false);
        assert!(BoundingBox::of_mask(&mask).is_none());
    }
}
