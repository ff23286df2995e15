//! Scene directory layout:
//!
//! ```text
//! scene/
//!   color.png      8-bit sRGB
//!   depth.pgm      16-bit binary PGM, millimeters, 0 = invalid
//!   mask_00.png …  8-bit masks, 255 = foreground, one per instance
//!   boxes.json     canvas size, depth encoding, instance boxes
//! ```
//!
//! Colors, masks and boxes round-trip bit-exactly; depth round-trips within
//! the half-millimeter quantization.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::color::image_to_lab;
use crate::error::{Error, Result};
use crate::grid::{BoundingBox, Grid};
use crate::scene::{Instance, Scene};

use super::depth::{depth_to_millimeters, millimeters_to_depth, read_pgm16, write_pgm16};

#[derive(Serialize, Deserialize)]
struct InstanceMeta {
    #[serde(rename = "box")]
    bbox: BoundingBox,
    mask_file: String,
}

#[derive(Serialize, Deserialize)]
struct SceneMeta {
    width: usize,
    height: usize,
    depth_unit: String,
    instances: Vec<InstanceMeta>,
}

/// Write a scene into `dir`, creating it if needed.
pub fn save_scene(scene: &Scene, dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::file_io(dir, e))?;
    let (h, w) = (scene.height(), scene.width());

    let color_path = dir.join("color.png");
    let rgb_bytes: Vec<u8> = scene.color.data().iter().flatten().copied().collect();
    image::save_buffer(
        &color_path,
        &rgb_bytes,
        w as u32,
        h as u32,
        image::ExtendedColorType::Rgb8,
    )
    .map_err(|e| Error::Image {
        path: color_path,
        source: e,
    })?;

    write_pgm16(&dir.join("depth.pgm"), &depth_to_millimeters(&scene.depth))?;

    let mut instances = Vec::new();
    for (i, inst) in scene.instances.iter().enumerate() {
        let mask_file = format!("mask_{i:02}.png");
        let path = dir.join(&mask_file);
        let bytes: Vec<u8> = inst
            .mask
            .data()
            .iter()
            .map(|&b| if b { 255u8 } else { 0 })
            .collect();
        image::save_buffer(&path, &bytes, w as u32, h as u32, image::ExtendedColorType::L8)
            .map_err(|e| Error::Image { path, source: e })?;
        instances.push(InstanceMeta {
            bbox: inst.bbox,
            mask_file,
        });
    }

    let meta = SceneMeta {
        width: w,
        height: h,
        depth_unit: "millimeter".into(),
        instances,
    };
    let json =
        serde_json::to_string_pretty(&meta).map_err(|e| Error::InvalidConfig(e.to_string()))?;
    fs::write(dir.join("boxes.json"), json).map_err(|e| Error::file_io(dir.join("boxes.json"), e))
}

fn load_png_rgb(path: &Path) -> Result<Grid<[u8; 3]>> {
    let img = image::open(path).map_err(|e| match e {
        image::ImageError::IoError(io) => Error::file_io(path, io),
        other => Error::Image {
            path: path.into(),
            source: other,
        },
    })?;
    let rgb = img.to_rgb8();
    let (w, h) = (rgb.width() as usize, rgb.height() as usize);
    let data = rgb.pixels().map(|p| p.0).collect();
    Ok(Grid::from_vec(h, w, data))
}

fn load_png_mask(path: &Path) -> Result<Grid<bool>> {
    let img = image::open(path).map_err(|e| match e {
        image::ImageError::IoError(io) => Error::file_io(path, io),
        other => Error::Image {
            path: path.into(),
            source: other,
        },
    })?;
    let gray = img.to_luma8();
    let (w, h) = (gray.width() as usize, gray.height() as usize);
    let data = gray.pixels().map(|p| p.0[0] >= 128).collect();
    Ok(Grid::from_vec(h, w, data))
}

/// Load a scene directory written by [`save_scene`].
pub fn load_scene(dir: &Path) -> Result<Scene> {
    let meta_path = dir.join("boxes.json");
    let json = fs::read_to_string(&meta_path).map_err(|e| Error::file_io(&meta_path, e))?;
    let meta: SceneMeta =
        serde_json::from_str(&json).map_err(|e| Error::corrupt(&meta_path, e.to_string()))?;

    let color = load_png_rgb(&dir.join("color.png"))?;
    if color.height() != meta.height || color.width() != meta.width {
        return Err(Error::corrupt(
            dir.join("color.png"),
            format!(
                "expected {}x{}, found {}x{}",
                meta.width,
                meta.height,
                color.width(),
                color.height()
            ),
        ));
    }

    let depth_path = dir.join("depth.pgm");
    let mm = read_pgm16(&depth_path)?;
    if mm.height() != meta.height || mm.width() != meta.width {
        return Err(Error::corrupt(depth_path, "depth size mismatch"));
    }
    let depth = millimeters_to_depth(&mm);

    let mut instances = Vec::with_capacity(meta.instances.len());
    for im in &meta.instances {
        let mask = load_png_mask(&dir.join(&im.mask_file))?;
        if mask.height() != meta.height || mask.width() != meta.width {
            return Err(Error::corrupt(dir.join(&im.mask_file), "mask size mismatch"));
        }
        instances.push(Instance {
            mask,
            bbox: im.bbox,
        });
    }

    let lab = image_to_lab(&color);
    Ok(Scene {
        color,
        lab,
        depth,
        instances,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scene::{generate_scene, SceneSpec};

    #[test]
    fn save_load_round_trip() {
        let scene = generate_scene(100, &SceneSpec::default()).unwrap();
        let dir = tempfile::tempdir().unwrap();
        save_scene(&scene, dir.path()).unwrap();
        let back = load_scene(dir.path()).unwrap();

        assert_eq!(scene.color, back.color);
        assert_eq!(scene.instances.len(), back.instances.len());
        for (a, b) in scene.instances.iter().zip(&back.instances) {
            assert_eq!(a.mask, b.mask);
            assert_eq!(a.bbox, b.bbox);
        }
        assert_eq!(scene.depth.valid, back.depth.valid);
        for row in 0..scene.height() {
            for col in 0..scene.width() {
                let err = (scene.depth.get(row, col).unwrap()
                    - back.depth.get(row, col).unwrap())
                .abs();
                assert!(err <= 0.0005 + 1e-12);
            }
        }
    }

    #[test]
    fn missing_boxes_json_names_the_file() {
        let dir = tempfile::tempdir().unwrap();
        let err = load_scene(dir.path()).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("boxes.json"), "unhelpful error: {msg}");
    }

    #[test]
    fn corrupt_metadata_is_reported() {
        let scene = generate_scene(100, &SceneSpec::single_instance()).unwrap();
        let dir = tempfile::tempdir().unwrap();
        save_scene(&scene, dir.path()).unwrap();
        std::fs::write(dir.path().join("boxes.json"), "{not json").unwrap();
        let err = load_scene(dir.path()).unwrap_err();
        assert!(matches!(err, Error::CorruptFile { .. }));
    }
}
