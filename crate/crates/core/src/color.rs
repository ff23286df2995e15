//! sRGB → CIELAB conversion (D65 white point).

use crate::grid::Grid;

/// CIELAB triple as [L*, a*, b*].
pub type Lab = [f64; 3];

/// Image of 8-bit sRGB triples.
pub type RgbImage = Grid<[u8; 3]>;

/// Image of CIELAB triples.
pub type LabImage = Grid<Lab>;

const EPSILON: f64 = 216.0 / 24389.0;
const KAPPA: f64 = 24389.0 / 27.0;
// D65 reference white.
const WHITE: [f64; 3] = [0.95047, 1.0, 1.08883];

#[inline]
fn srgb_to_linear(c: u8) -> f64 {
    let c = c as f64 / 255.0;
    if c <= 0.04045 {
        c / 12.92
    } else {
        ((c + 0.055) / 1.055).powf(2.4)
    }
}

#[inline]
fn lab_f(t: f64) -> f64 {
    if t > EPSILON {
        t.cbrt()
    } else {
        (KAPPA * t + 16.0) / 116.0
    }
}

/// Convert a single sRGB pixel to CIELAB.
pub fn srgb_to_lab(rgb: [u8; 3]) -> Lab {
    let r = srgb_to_linear(rgb[0]);
    let g = srgb_to_linear(rgb[1]);
    let b = srgb_to_linear(rgb[2]);

    let x = 0.4124564 * r + 0.3575761 * g + 0.1804375 * b;
    let y = 0.2126729 * r + 0.7151522 * g + 0.0721750 * b;
    let z = 0.0193339 * r + 0.1191920 * g + 0.9503041 * b;

    let fx = lab_f(x / WHITE[0]);
    let fy = lab_f(y / WHITE[1]);
    let fz = lab_f(z / WHITE[2]);

    [116.0 * fy - 16.0, 500.0 * (fx - fy), 200.0 * (fy - fz)]
}

/// Convert a whole sRGB image to CIELAB.
pub fn image_to_lab(rgb: &RgbImage) -> LabImage {
    Grid::from_vec(
        rgb.height(),
        rgb.width(),
        rgb.data().iter().map(|&px| srgb_to_lab(px)).collect(),
    )
}

/// Euclidean distance between two CIELAB triples.
#[inline]
pub fn lab_distance(a: Lab, b: Lab) -> f64 {
    let dl = a[0] - b[0];
    let da = a[1] - b[1];
    let db = a[2] - b[2];
    (dl * dl + da * da + db * db).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn white_and_black() {
        let white = srgb_to_lab([255, 255, 255]);
        assert!((white[0] - 100.0).abs() < 1e-3);
        assert!(white[1].abs() < 1e-2);
        assert!(white[2].abs() < 1e-2);

        let black = srgb_to_lab([0, 0, 0]);
        assert!(black[0].abs() < 1e-6);
    }

    #[test]
    fn mid_gray_is_neutral() {
        let gray = srgb_to_lab([119, 119, 119]);
        assert!(gray[1].abs() < 1e-2);
        assert!(gray[2].abs() < 1e-2);
        assert!(gray[0] > 40.0 && gray[0] < 60.0);
    }

    #[test]
    fn distance_is_symmetric() {
        let a = srgb_to_lab([200, 30, 40]);
        let b = srgb_to_lab([20, 160, 220]);
        assert_eq!(lab_distance(a, b), lab_distance(b, a));
        assert_eq!(lab_distance(a, a), 0.0);
    }
}
