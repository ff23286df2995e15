//! Deterministic exports. Floats print with 17 significant digits so CSV
//! bytes are identical across runs; image exports go through fixed encoders.

use std::fs;
use std::io::Write;
use std::path::Path;

use crate::error::{Error, Result};
use crate::grid::{BinaryMask, Grid, ProbMask};
use crate::landscape::LandscapeSample;
use crate::loss::GammaAnalysis;
use crate::optimize::{RunTrace, SweepTable};

/// 17 significant digits, enough to round-trip any f64 exactly.
pub fn fmt_float(x: f64) -> String {
    format!("{x:.16e}")
}

fn write_file(path: &Path, contents: &[u8]) -> Result<()> {
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            fs::create_dir_all(parent).map_err(|e| Error::file_io(parent, e))?;
        }
    }
    fs::write(path, contents).map_err(|e| Error::file_io(path, e))
}

/// Columns: step, L_proj, L_color, L_depth, iou, fill_ratio.
pub fn write_trace_csv(path: &Path, trace: &RunTrace) -> Result<()> {
    let mut out = Vec::new();
    writeln!(out, "step,L_proj,L_color,L_depth,iou,fill_ratio").unwrap();
    for r in &trace.records {
        writeln!(
            out,
            "{},{},{},{},{},{}",
            r.step,
            fmt_float(r.terms.projection),
            fmt_float(r.terms.color),
            fmt_float(r.terms.depth),
            fmt_float(r.metrics.iou_gt),
            fmt_float(r.metrics.fill_ratio),
        )
        .unwrap();
    }
    write_file(path, &out)
}

/// Columns: x, y, loss — row-major over the sampled surface.
pub fn write_landscape_csv(path: &Path, sample: &LandscapeSample) -> Result<()> {
    let mut out = Vec::new();
    writeln!(out, "x,y,loss").unwrap();
    for ib in 0..sample.resolution {
        for ia in 0..sample.resolution {
            writeln!(
                out,
                "{},{},{}",
                fmt_float(sample.axis[ia]),
                fmt_float(sample.axis[ib]),
                fmt_float(sample.value(ia, ib)),
            )
            .unwrap();
        }
    }
    write_file(path, &out)
}

/// Columns: modality, delta, gamma, mean_iou.
pub fn write_sweep_csv(path: &Path, table: &SweepTable) -> Result<()> {
    let mut out = Vec::new();
    writeln!(out, "modality,delta,gamma,mean_iou").unwrap();
    for (gi, &gamma) in table.gammas.iter().enumerate() {
        for (di, &delta) in table.deltas.iter().enumerate() {
            writeln!(
                out,
                "{},{},{},{}",
                table.modality,
                fmt_float(delta),
                fmt_float(gamma),
                fmt_float(table.mean_iou[gi][di]),
            )
            .unwrap();
        }
    }
    write_file(path, &out)
}

/// Columns: gamma, argmin_p, min_value, has_extra_stationary_points.
pub fn write_gamma_scan_csv(path: &Path, rows: &[GammaAnalysis]) -> Result<()> {
    let mut out = Vec::new();
    writeln!(out, "gamma,argmin_p,min_value,has_extra_stationary_points").unwrap();
    for r in rows {
        writeln!(
            out,
            "{},{},{},{}",
            fmt_float(r.gamma),
            fmt_float(r.argmin_p),
            fmt_float(r.min_value),
            r.has_extra_stationary_points,
        )
        .unwrap();
    }
    write_file(path, &out)
}

fn save_l8_png(path: &Path, bytes: &[u8], width: usize, height: usize) -> Result<()> {
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            fs::create_dir_all(parent).map_err(|e| Error::file_io(parent, e))?;
        }
    }
    image::save_buffer(
        path,
        bytes,
        width as u32,
        height as u32,
        image::ExtendedColorType::L8,
    )
    .map_err(|e| Error::Image {
        path: path.into(),
        source: e,
    })
}

/// Binary mask as an 8-bit PNG, foreground = 255.
pub fn save_mask_png(path: &Path, mask: &BinaryMask) -> Result<()> {
    let bytes: Vec<u8> = mask
        .data()
        .iter()
        .map(|&b| if b { 255u8 } else { 0 })
        .collect();
    save_l8_png(path, &bytes, mask.width(), mask.height())
}

/// Binary mask as an 8-bit binary PGM, foreground = 255.
pub fn save_mask_pgm(path: &Path, mask: &BinaryMask) -> Result<()> {
    let mut out = format!("P5\n{} {}\n255\n", mask.width(), mask.height()).into_bytes();
    out.extend(mask.data().iter().map(|&b| if b { 255u8 } else { 0 }));
    write_file(path, &out)
}

/// Probability mask as an 8-bit PNG, linear [0,1] → [0,255].
pub fn save_prob_png(path: &Path, mask: &ProbMask) -> Result<()> {
    let bytes: Vec<u8> = mask
        .data()
        .iter()
        .map(|&v| (v.clamp(0.0, 1.0) * 255.0).round() as u8)
        .collect();
    save_l8_png(path, &bytes, mask.width(), mask.height())
}

/// Arbitrary scalar grid as an 8-bit PNG, min-max normalized.
pub fn save_gray_png(path: &Path, grid: &Grid<f64>) -> Result<()> {
    let (lo, hi) = grid
        .data()
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| {
            (lo.min(v), hi.max(v))
        });
    let span = if hi > lo { hi - lo } else { 1.0 };
    let bytes: Vec<u8> = grid
        .data()
        .iter()
        .map(|&v| (255.0 * (v - lo) / span).round() as u8)
        .collect();
    save_l8_png(path, &bytes, grid.width(), grid.height())
}

/// The sampled loss surface as a normalized grayscale heatmap.
pub fn save_heatmap_png(path: &Path, sample: &LandscapeSample) -> Result<()> {
    let grid = Grid::from_vec(sample.resolution, sample.resolution, sample.values.clone());
    save_gray_png(path, &grid)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn float_formatting_is_fixed_width_precision() {
        assert_eq!(fmt_float(0.5), "5.0000000000000000e-1");
        assert_eq!(fmt_float(0.0), "0.0000000000000000e0");
        let tricky = 0.1 + 0.2;
        let parsed: f64 = fmt_float(tricky).parse().unwrap();
        assert_eq!(parsed, tricky);
    }

    #[test]
    fn csv_headers_present() {
        let dir = tempfile::tempdir().unwrap();
        let trace = RunTrace::default();
        let path = dir.path().join("trace.csv");
        write_trace_csv(&path, &trace).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        assert!(text.starts_with("step,L_proj,L_color,L_depth,iou,fill_ratio\n"));
    }
}
