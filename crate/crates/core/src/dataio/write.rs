use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use image::{GrayImage, Luma};
use serde::{Deserialize, Serialize};

use super::{file_stem, list_images};
use crate::error::{Error, Result};
use crate::solver::{extract_mask, DecompositionResult, TraceRecord};

/// Intensity in `[0, 1]` to 8 bits, clamped, rounding halves up.
pub fn quantize(v: f64) -> u8 {
    (v.clamp(0.0, 1.0) * 255.0 + 0.5).floor() as u8
}

fn save(img: &GrayImage, path: &Path) -> Result<()> {
    img.save(path).map_err(|e| Error::ImageWrite {
        path: path.to_path_buf(),
        reason: e.to_string(),
    })
}

pub fn write_frame_png(path: &Path, width: usize, height: usize, values: &[f64]) -> Result<()> {
    let img = GrayImage::from_fn(width as u32, height as u32, |x, y| {
        Luma([quantize(values[y as usize * width + x as usize])])
    });
    save(&img, path)
}

/// Binary mask as a 0/255 grayscale image.
pub fn write_mask_png(path: &Path, width: usize, height: usize, mask: &[bool]) -> Result<()> {
    let img = GrayImage::from_fn(width as u32, height as u32, |x, y| {
        Luma([if mask[y as usize * width + x as usize] {
            255
        } else {
            0
        }])
    });
    save(&img, path)
}

pub fn write_trace(path: &Path, trace: &[TraceRecord]) -> Result<()> {
    let text = serde_json::to_string_pretty(trace).map_err(|e| Error::Json {
        path: path.to_path_buf(),
        source: e,
    })?;
    fs::write(path, text + "\n").map_err(|e| Error::io(path, e))
}

pub fn read_trace(path: &Path) -> Result<Vec<TraceRecord>> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| Error::Json {
        path: path.to_path_buf(),
        source: e,
    })
}

/// Run metadata written next to the outputs as `run.json`.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct RunSummary {
    pub version: String,
    pub mode: String,
    pub converged: bool,
    pub iterations: usize,
    pub final_residual: Option<f64>,
    pub lambda: f64,
    pub runtime_seconds: f64,
    pub frames: Vec<String>,
    pub training_frames: Vec<String>,
    pub training_rank: Option<usize>,
}

fn ensure_dir(path: &Path) -> Result<()> {
    fs::create_dir_all(path).map_err(|e| Error::io(path, e))
}

/// Writes `background/<stem>.png`, `mask/<stem>.png` and `trace.json` under
/// `out_dir`. Column `j` of the result is written under `stems[j]`.
pub fn write_results(
    result: &DecompositionResult,
    width: usize,
    height: usize,
    stems: &[String],
    out_dir: &Path,
    mask_eps: f64,
) -> Result<()> {
    let p = width * height;
    if result.background.rows() != p || result.background.cols() != stems.len() {
        return Err(Error::ShapeMismatch {
            expected: format!("{p}x{} result for {width}x{height} frames", stems.len()),
            actual: format!("{}x{}", result.background.rows(), result.background.cols()),
        });
    }
    let bg_dir = out_dir.join("background");
    let mask_dir = out_dir.join("mask");
    ensure_dir(&bg_dir)?;
    ensure_dir(&mask_dir)?;
    for (j, stem) in stems.iter().enumerate() {
        write_frame_png(
            &bg_dir.join(format!("{stem}.png")),
            width,
            height,
            result.background.col(j),
        )?;
        let mask = extract_mask(result.foreground.col(j), mask_eps)?;
        write_mask_png(&mask_dir.join(format!("{stem}.png")), width, height, &mask)?;
    }
    write_trace(&out_dir.join("trace.json"), &result.trace)
}

/// Binary masks read back from a directory (`value >= 128` is foreground),
/// keyed by file stem.
#[derive(Debug, Clone)]
pub struct MaskImage {
    pub path: PathBuf,
    pub width: usize,
    pub height: usize,
    pub mask: Vec<bool>,
}

pub fn read_mask_dir(dir: &Path) -> Result<BTreeMap<String, MaskImage>> {
    let mut out = BTreeMap::new();
    for path in list_images(dir)? {
        let img = image::open(&path)
            .map_err(|e| Error::UnreadableImage {
                path: path.clone(),
                reason: e.to_string(),
            })?
            .to_luma8();
        let mask = img.pixels().map(|p| p.0[0] >= 128).collect();
        out.insert(
            file_stem(&path),
            MaskImage {
                width: img.width() as usize,
                height: img.height() as usize,
                mask,
                path,
            },
        );
    }
    Ok(out)
}
