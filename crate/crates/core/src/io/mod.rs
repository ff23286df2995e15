//! File formats and export paths: 16-bit PGM depth/disparity, PNG images,
//! CSV tables with fixed 17-significant-digit float formatting, and the scene
//! directory layout.

pub mod depth;
pub mod export;
pub mod scene_io;

pub use depth::{disparity_to_depth, read_pgm16, write_pgm16, CameraParams, DisparityImage};
pub use export::{
    fmt_float, save_gray_png, save_heatmap_png, save_mask_pgm, save_mask_png, save_prob_png,
    write_gamma_scan_csv, write_landscape_csv, write_sweep_csv, write_trace_csv,
};
pub use scene_io::{load_scene, save_scene};
