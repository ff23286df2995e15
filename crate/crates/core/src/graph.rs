//! Dilated pixel-pair edge structure. Every pixel p looks along k²−1
//! directions; one dilation step away sits the first-order neighbor p1 and a
//! second step along the same direction the second-order neighbor p2. The
//! affinity edge links p and p2, with p1 supplying the middle depth sample
//! for the second-difference test |d_p + d_p2 − 2·d_p1|.

use crate::color::{lab_distance, LabImage};
use crate::error::{Error, Result};
use crate::grid::{BinaryMask, BoundingBox, DepthMap, Grid, Pixel};

/// Length scale of the color similarity kernel exp(−‖Δlab‖ / θ).
pub const COLOR_SIMILARITY_THETA: f64 = 2.0;

/// Kernel size and dilation of the neighborhood. A k×k kernel yields k²−1
/// directions per pixel.
#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub struct NeighborhoodSpec {
    pub k: usize,
    pub dilation: usize,
}

impl Default for NeighborhoodSpec {
    fn default() -> Self {
        NeighborhoodSpec { k: 3, dilation: 2 }
    }
}

impl NeighborhoodSpec {
    pub fn new(k: usize, dilation: usize) -> Result<Self> {
        if k < 3 || k % 2 == 0 {
            return Err(Error::InvalidConfig(format!(
                "kernel size must be odd and >= 3, got {k}"
            )));
        }
        if dilation == 0 {
            return Err(Error::InvalidConfig("dilation must be >= 1".into()));
        }
        Ok(NeighborhoodSpec { k, dilation })
    }

    pub fn direction_count(&self) -> usize {
        self.k * self.k - 1
    }

    /// Direction offsets (drow, dcol), row-major order, center excluded.
    pub fn directions(&self) -> Vec<(isize, isize)> {
        let r = (self.k / 2) as isize;
        let mut dirs = Vec::with_capacity(self.direction_count());
        for dr in -r..=r {
            for dc in -r..=r {
                if dr != 0 || dc != 0 {
                    dirs.push((dr, dc));
                }
            }
        }
        dirs
    }
}

/// One affinity edge: center pixel, first-order neighbor, second-order
/// neighbor, all collinear and equally spaced by the dilation.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Edge {
    pub p: Pixel,
    pub p1: Pixel,
    pub p2: Pixel,
    pub direction: usize,
}

/// All in-bounds edges of an image plus per-edge verdicts: `qualifying` marks
/// edges that passed the affinity test, `in_box` marks edges eligible for the
/// loss (valid samples, at least one endpoint inside a box).
#[derive(Clone, Debug)]
pub struct EdgeSet {
    pub height: usize,
    pub width: usize,
    pub spec: NeighborhoodSpec,
    pub edges: Vec<Edge>,
    pub qualifying: Vec<bool>,
    pub in_box: Vec<bool>,
}

impl EdgeSet {
    /// Number of edges counted by the loss normalization.
    pub fn active_count(&self) -> usize {
        self.qualifying
            .iter()
            .zip(&self.in_box)
            .filter(|(&q, &b)| q && b)
            .count()
    }

    /// Indices of edges that both qualify and touch a box.
    pub fn active_indices(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.edges.len()).filter(move |&i| self.qualifying[i] && self.in_box[i])
    }
}

/// Enumerate every edge whose three pixels lie inside the image, in row-major
/// pixel order with the direction index as the minor key.
pub fn enumerate_edges(height: usize, width: usize, spec: NeighborhoodSpec) -> EdgeSet {
    let dirs = spec.directions();
    let d = spec.dilation as isize;
    let mut edges = Vec::new();

    let shift = |p: Pixel, dir: (isize, isize), steps: isize| -> Option<Pixel> {
        let row = p.0 as isize + dir.0 * d * steps;
        let col = p.1 as isize + dir.1 * d * steps;
        if row >= 0 && col >= 0 && (row as usize) < height && (col as usize) < width {
            Some((row as usize, col as usize))
        } else {
            None
        }
    };

    for row in 0..height {
        for col in 0..width {
            let p = (row, col);
            for (di, &dir) in dirs.iter().enumerate() {
                if let (Some(p1), Some(p2)) = (shift(p, dir, 1), shift(p, dir, 2)) {
                    edges.push(Edge {
                        p,
                        p1,
                        p2,
                        direction: di,
                    });
                }
            }
        }
    }

    let n = edges.len();
    EdgeSet {
        height,
        width,
        spec,
        edges,
        qualifying: vec![false; n],
        in_box: vec![false; n],
    }
}

/// Second difference of depth along an edge, |d_p + d_p2 − 2·d_p1|, or None
/// when any of the three samples is invalid.
#[inline]
pub fn depth_grad_diff(depths: &DepthMap, edge: &Edge) -> Option<f64> {
    let dp = depths.get(edge.p.0, edge.p.1)?;
    let d1 = depths.get(edge.p1.0, edge.p1.1)?;
    let d2 = depths.get(edge.p2.0, edge.p2.1)?;
    Some((dp + d2 - 2.0 * d1).abs())
}

/// Color similarity of an edge's endpoints, exp(−‖lab_p − lab_p2‖ / θ).
#[inline]
pub fn color_similarity(lab: &LabImage, edge: &Edge) -> f64 {
    let a = lab.at(edge.p.0, edge.p.1);
    let b = lab.at(edge.p2.0, edge.p2.1);
    (-lab_distance(a, b) / COLOR_SIMILARITY_THETA).exp()
}

fn endpoint_in_any_box(edge: &Edge, boxes: &[BoundingBox]) -> bool {
    boxes
        .iter()
        .any(|b| b.contains(edge.p) || b.contains(edge.p2))
}

/// Flag edges whose depth second difference is valid and at most `tau_d`.
/// `in_box` additionally requires all three depth samples valid and at least
/// one endpoint inside a box.
pub fn qualify_depth_edges(
    edges: &EdgeSet,
    depths: &DepthMap,
    tau_d: f64,
    boxes: &[BoundingBox],
) -> EdgeSet {
    let mut out = edges.clone();
    for (i, edge) in edges.edges.iter().enumerate() {
        let diff = depth_grad_diff(depths, edge);
        out.qualifying[i] = matches!(diff, Some(d) if d <= tau_d);
        out.in_box[i] = diff.is_some() && endpoint_in_any_box(edge, boxes);
    }
    out
}

/// Flag edges whose endpoint color similarity is at least `tau_c`. `in_box`
/// requires at least one endpoint inside a box.
pub fn qualify_color_edges(
    edges: &EdgeSet,
    lab: &LabImage,
    tau_c: f64,
    boxes: &[BoundingBox],
) -> EdgeSet {
    let mut out = edges.clone();
    for (i, edge) in edges.edges.iter().enumerate() {
        out.qualifying[i] = color_similarity(lab, edge) >= tau_c;
        out.in_box[i] = endpoint_in_any_box(edge, boxes);
    }
    out
}

/// One binary map per direction marking the pixels p whose edge in that
/// direction qualifies.
pub fn affinity_maps(edges: &EdgeSet) -> Vec<BinaryMask> {
    let mut maps =
        vec![Grid::filled(edges.height, edges.width, false); edges.spec.direction_count()];
    for (i, edge) in edges.edges.iter().enumerate() {
        if edges.qualifying[i] {
            maps[edge.direction].set(edge.p.0, edge.p.1, true);
        }
    }
    maps
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::color::image_to_lab;
    use proptest::prelude::*;

    /// Independent enumeration: loop over pixels, directions and bounds the
    /// slow explicit way.
    fn brute_force_edges(height: usize, width: usize, spec: NeighborhoodSpec) -> Vec<Edge> {
        let r = (spec.k / 2) as isize;
        let d = spec.dilation as isize;
        let mut out = Vec::new();
        for row in 0..height as isize {
            for col in 0..width as isize {
                let mut direction = 0usize;
                for dr in -r..=r {
                    for dc in -r..=r {
                        if dr == 0 && dc == 0 {
                            continue;
                        }
                        let (r1, c1) = (row + dr * d, col + dc * d);
                        let (r2, c2) = (row + 2 * dr * d, col + 2 * dc * d);
                        let inside = |r: isize, c: isize| {
                            r >= 0 && c >= 0 && r < height as isize && c < width as isize
                        };
                        if inside(r1, c1) && inside(r2, c2) {
                            out.push(Edge {
                                p: (row as usize, col as usize),
                                p1: (r1 as usize, c1 as usize),
                                p2: (r2 as usize, c2 as usize),
                                direction,
                            });
                        }
                        direction += 1;
                    }
                }
            }
        }
        out
    }

    #[test]
    fn tiny_image_has_no_edges() {
        let set = enumerate_edges(1, 1, NeighborhoodSpec::default());
        assert!(set.edges.is_empty());
    }

    #[test]
    fn center_pixel_has_all_directions() {
        // The second-order neighbor sits 2·dilation away, so the smallest
        // grid giving the center all 8 directions is 5×5 at dilation 1 and
        // 9×9 at dilation 2.
        let set = enumerate_edges(5, 5, NeighborhoodSpec::new(3, 1).unwrap());
        let center: Vec<_> = set.edges.iter().filter(|e| e.p == (2, 2)).collect();
        assert_eq!(center.len(), 8);
        for e in &center {
            let d1 = (
                e.p1.0 as isize - e.p.0 as isize,
                e.p1.1 as isize - e.p.1 as isize,
            );
            let d2 = (
                e.p2.0 as isize - e.p1.0 as isize,
                e.p2.1 as isize - e.p1.1 as isize,
            );
            assert_eq!(d1, d2);
        }

        let set = enumerate_edges(9, 9, NeighborhoodSpec::default());
        let center = set.edges.iter().filter(|e| e.p == (4, 4)).count();
        assert_eq!(center, 8);
        // On 5×5 at dilation 2 the reach is 4, so the center has none.
        let set = enumerate_edges(5, 5, NeighborhoodSpec::default());
        assert_eq!(set.edges.iter().filter(|e| e.p == (2, 2)).count(), 0);
    }

    #[test]
    fn enumeration_matches_brute_force() {
        for (k, d) in [(3, 1), (3, 2), (5, 2)] {
            let spec = NeighborhoodSpec::new(k, d).unwrap();
            for (h, w) in [(1, 1), (4, 7), (9, 3), (16, 16), (64, 64)] {
                let fast = enumerate_edges(h, w, spec);
                let slow = brute_force_edges(h, w, spec);
                assert_eq!(fast.edges, slow, "k={k} d={d} {h}x{w}");
            }
        }
    }

    #[test]
    fn depth_diff_values() {
        let set = enumerate_edges(1, 5, NeighborhoodSpec::new(3, 2).unwrap());
        let edge = set
            .edges
            .iter()
            .find(|e| e.p == (0, 0) && e.p2 == (0, 4))
            .unwrap();

        let ramp = DepthMap {
            values: Grid::from_vec(1, 5, vec![5.0, 0.0, 4.0, 0.0, 3.0]),
            valid: Grid::filled(1, 5, true),
        };
        assert_eq!(depth_grad_diff(&ramp, edge), Some(0.0));

        let curved = DepthMap {
            values: Grid::from_vec(1, 5, vec![2.0, 0.0, 1.0, 0.0, 0.5]),
            valid: Grid::filled(1, 5, true),
        };
        assert_eq!(depth_grad_diff(&curved, edge), Some(0.5));

        let mut holed = ramp.clone();
        holed.valid.set(0, 2, false);
        assert_eq!(depth_grad_diff(&holed, edge), None);
    }

    #[test]
    fn color_similarity_values() {
        let mut rgb = Grid::filled(1, 5, [100u8, 150, 200]);
        let lab = image_to_lab(&rgb);
        let set = enumerate_edges(1, 5, NeighborhoodSpec::new(3, 2).unwrap());
        let edge = set.edges.iter().find(|e| e.p == (0, 0)).unwrap();
        assert_eq!(color_similarity(&lab, edge), 1.0);

        rgb.set(0, 4, [10, 20, 30]);
        let lab = image_to_lab(&rgb);
        let edge = set
            .edges
            .iter()
            .find(|e| e.p == (0, 0) && e.p2 == (0, 4))
            .unwrap();
        let expected =
            (-lab_distance(lab.at(0, 0), lab.at(0, 4)) / COLOR_SIMILARITY_THETA).exp();
        assert_eq!(color_similarity(&lab, edge), expected);
        assert!(color_similarity(&lab, edge) < 1.0);
    }

    #[test]
    fn constant_depth_plane_fully_qualifies() {
        let depths = DepthMap::filled(8, 8, 5.0);
        let set = enumerate_edges(8, 8, NeighborhoodSpec::default());
        let boxes = [BoundingBox {
            x0: 2,
            y0: 2,
            x1: 5,
            y1: 5,
        }];
        let q = qualify_depth_edges(&set, &depths, 0.01, &boxes);
        assert!(q.qualifying.iter().all(|&b| b));
        assert!(q.active_count() > 0);
    }

    #[test]
    fn depth_step_disqualifies_straddling_edges() {
        // Two constant planes split at column 4 with a 1 m step.
        let mut depths = DepthMap::filled(8, 8, 5.0);
        for row in 0..8 {
            for col in 4..8 {
                depths.values.set(row, col, 6.0);
            }
        }
        let set = enumerate_edges(8, 8, NeighborhoodSpec::default());
        let q = qualify_depth_edges(&set, &depths, 0.01, &[]);
        for (i, edge) in q.edges.iter().enumerate() {
            let sides = [edge.p.1 < 4, edge.p1.1 < 4, edge.p2.1 < 4];
            let straddles = !(sides.iter().all(|&s| s) || sides.iter().all(|&s| !s));
            assert_eq!(q.qualifying[i], !straddles, "edge {edge:?}");
        }
    }

    #[test]
    fn affinity_map_population_partitions_qualifying() {
        let mut depths = DepthMap::filled(10, 10, 3.0);
        for row in 0..10 {
            for col in 5..10 {
                depths.values.set(row, col, 7.0);
            }
        }
        let set = enumerate_edges(10, 10, NeighborhoodSpec::default());
        let q = qualify_depth_edges(&set, &depths, 0.01, &[]);
        let maps = affinity_maps(&q);
        assert_eq!(maps.len(), 8);
        let population: usize = maps
            .iter()
            .map(|m| m.data().iter().filter(|&&b| b).count())
            .sum();
        let qualifying = q.qualifying.iter().filter(|&&b| b).count();
        assert_eq!(population, qualifying);

        // A vertical depth step leaves a gap in the horizontal maps.
        let horizontal = &maps[3]; // direction (0, -1)
        let any_gap = (0..10).any(|row| !horizontal.at(row, 5));
        assert!(any_gap);
    }

    #[test]
    fn in_box_requires_valid_depth() {
        let mut depths = DepthMap::filled(8, 8, 5.0);
        depths.valid.set(3, 3, false);
        let set = enumerate_edges(8, 8, NeighborhoodSpec::default());
        let boxes = [BoundingBox {
            x0: 0,
            y0: 0,
            x1: 7,
            y1: 7,
        }];
        let q = qualify_depth_edges(&set, &depths, 0.01, &boxes);
        for (i, edge) in q.edges.iter().enumerate() {
            let touches_hole = edge.p == (3, 3) || edge.p1 == (3, 3) || edge.p2 == (3, 3);
            if touches_hole {
                assert!(!q.in_box[i]);
                assert!(!q.qualifying[i]);
            } else {
                assert!(q.in_box[i]);
            }
        }
    }

    proptest! {
        #[test]
        fn qualification_monotone_in_tau(tau_lo in 0.001..0.5f64, bump in 0.0..0.5f64) {
            let mut depths = DepthMap::filled(6, 6, 4.0);
            // Deterministic wavy surface.
            for row in 0..6 {
                for col in 0..6 {
                    let v = 4.0 + 0.3 * ((row * 7 + col * 3) as f64).sin();
                    depths.values.set(row, col, v);
                }
            }
            let set = enumerate_edges(6, 6, NeighborhoodSpec::new(3, 1).unwrap());
            let lo = qualify_depth_edges(&set, &depths, tau_lo, &[]);
            let hi = qualify_depth_edges(&set, &depths, tau_lo + bump, &[]);
            for i in 0..set.edges.len() {
                prop_assert!(!lo.qualifying[i] || hi.qualifying[i]);
            }
        }

        #[test]
        fn in_box_monotone_in_box_area(grow in 0usize..3) {
            let depths = DepthMap::filled(10, 10, 4.0);
            let set = enumerate_edges(10, 10, NeighborhoodSpec::default());
            let small = BoundingBox { x0: 4, y0: 4, x1: 6, y1: 6 };
            let big = BoundingBox {
                x0: small.x0 - grow,
                y0: small.y0 - grow,
                x1: small.x1 + grow,
                y1: small.y1 + grow,
            };
            let qs = qualify_depth_edges(&set, &depths, 0.01, &[small]);
            let qb = qualify_depth_edges(&set, &depths, 0.01, &[big]);
            for i in 0..set.edges.len() {
                prop_assert!(!qs.in_box[i] || qb.in_box[i]);
            }
        }
    }
}
