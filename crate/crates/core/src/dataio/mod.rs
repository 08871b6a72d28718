//! Frame and ground-truth ingestion, observation assembly, and result output.
//!
//! Frames are converted to luminance `0.299 R + 0.587 G + 0.114 B`, scaled to
//! `[0, 1]`, and vectorized row-major (`index = y * width + x`).

mod layout;
mod write;

pub use layout::DatasetLayout;
pub use write::{
    quantize, read_mask_dir, read_trace, write_frame_png, write_mask_png, write_results,
    write_trace, MaskImage, RunSummary,
};

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use image::DynamicImage;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::matrixkit::DenseMatrix;
use crate::observation::ObservationMatrix;

const IMAGE_EXTENSIONS: &[&str] = &["pgm", "ppm", "pnm", "pbm", "png", "bmp"];

/// An ordered sequence of equally sized intensity frames.
#[derive(Debug, Clone, PartialEq)]
pub struct FrameSequence {
    pub width: usize,
    pub height: usize,
    /// Row-major intensities in `[0, 1]`.
    pub frames: Vec<Vec<f64>>,
    /// File stem of each frame.
    pub source_names: Vec<String>,
}

impl FrameSequence {
    pub fn len(&self) -> usize {
        self.frames.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frames.is_empty()
    }

    pub fn pixels(&self) -> usize {
        self.width * self.height
    }

    /// Sub-sequence of the given frame indices.
    pub fn select(&self, idx: &[usize]) -> FrameSequence {
        FrameSequence {
            width: self.width,
            height: self.height,
            frames: idx.iter().map(|&i| self.frames[i].clone()).collect(),
            source_names: idx.iter().map(|&i| self.source_names[i].clone()).collect(),
        }
    }
}

/// Per-pixel ground-truth label.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GtLabel {
    Background,
    Foreground,
    /// Excluded from scoring.
    Unknown,
}

impl GtLabel {
    /// `0` is background, `255` foreground, anything else unknown.
    pub fn from_gray(v: u8) -> Self {
        match v {
            0 => GtLabel::Background,
            255 => GtLabel::Foreground,
            _ => GtLabel::Unknown,
        }
    }
}

/// Ground-truth masks keyed by the stem of the frame they label.
#[derive(Debug, Clone, PartialEq)]
pub struct GroundTruth {
    pub width: usize,
    pub height: usize,
    pub masks: BTreeMap<String, Vec<GtLabel>>,
}

impl GroundTruth {
    pub fn get(&self, stem: &str) -> Option<&[GtLabel]> {
        self.masks.get(stem).map(Vec::as_slice)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LoadOptions {
    /// Integer box-filter downscale factor; 1 keeps full resolution.
    pub downscale: usize,
    pub layout: DatasetLayout,
}

impl Default for LoadOptions {
    fn default() -> Self {
        LoadOptions {
            downscale: 1,
            layout: DatasetLayout::Generic,
        }
    }
}

fn is_image(path: &Path) -> bool {
    path.extension()
        .and_then(|e| e.to_str())
        .map(|e| IMAGE_EXTENSIONS.contains(&e.to_ascii_lowercase().as_str()))
        .unwrap_or(false)
}

pub(crate) fn file_stem(path: &Path) -> String {
    path.file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default()
}

/// Image files in `dir`, sorted by file name.
pub fn list_images(dir: &Path) -> Result<Vec<PathBuf>> {
    let entries = fs::read_dir(dir).map_err(|e| Error::io(dir, e))?;
    let mut files = Vec::new();
    for entry in entries {
        let entry = entry.map_err(|e| Error::io(dir, e))?;
        let path = entry.path();
        if path.is_file() && is_image(&path) {
            files.push(path);
        }
    }
    files.sort_by(|a, b| a.file_name().cmp(&b.file_name()));
    Ok(files)
}

struct Raster {
    width: usize,
    height: usize,
    values: Vec<f64>,
}

fn open_image(path: &Path) -> Result<DynamicImage> {
    image::open(path).map_err(|e| Error::UnreadableImage {
        path: path.to_path_buf(),
        reason: e.to_string(),
    })
}

/// Luminance in `[0, 1]`.
fn to_intensity(img: &DynamicImage) -> Raster {
    let (width, height) = (img.width() as usize, img.height() as usize);
    let values = if img.color().has_color() {
        img.to_rgb8()
            .pixels()
            .map(|p| {
                let [r, g, b] = p.0;
                (0.299 * r as f64 + 0.587 * g as f64 + 0.114 * b as f64) / 255.0
            })
            .collect()
    } else {
        img.to_luma8()
            .pixels()
            .map(|p| p.0[0] as f64 / 255.0)
            .collect()
    };
    Raster {
        width,
        height,
        values,
    }
}

fn box_downscale(r: Raster, k: usize) -> Raster {
    if k == 1 {
        return r;
    }
    let (w, h) = (r.width / k, r.height / k);
    let inv = 1.0 / (k * k) as f64;
    let mut values = Vec::with_capacity(w * h);
    for y in 0..h {
        for x in 0..w {
            let mut acc = 0.0;
            for dy in 0..k {
                let row = (y * k + dy) * r.width;
                for dx in 0..k {
                    acc += r.values[row + x * k + dx];
                }
            }
            values.push(acc * inv);
        }
    }
    Raster {
        width: w,
        height: h,
        values,
    }
}

/// Loads every image frame of a dataset directory in file-name order.
pub fn load_sequence(path: &Path, options: &LoadOptions) -> Result<FrameSequence> {
    if options.downscale == 0 {
        return Err(Error::invalid("downscale factor must be at least 1"));
    }
    let dir = options.layout.frame_dir(path);
    let files: Vec<PathBuf> = list_images(&dir)?
        .into_iter()
        .filter(|p| !options.layout.is_ground_truth(&file_stem(p)))
        .collect();
    if files.is_empty() {
        return Err(Error::EmptyDirectory(dir));
    }

    let rasters: Vec<Raster> = files
        .par_iter()
        .map(|p| {
            let img = open_image(p)?;
            Ok(box_downscale(to_intensity(&img), options.downscale))
        })
        .collect::<Result<_>>()?;

    let (width, height) = (rasters[0].width, rasters[0].height);
    if width == 0 || height == 0 {
        return Err(Error::invalid(format!(
            "{} is too small for downscale factor {}",
            files[0].display(),
            options.downscale
        )));
    }
    for (r, p) in rasters.iter().zip(&files) {
        if (r.width, r.height) != (width, height) {
            return Err(Error::GeometryMismatch {
                path: p.clone(),
                width,
                height,
                actual_width: r.width,
                actual_height: r.height,
            });
        }
    }
    Ok(FrameSequence {
        width,
        height,
        source_names: files.iter().map(|p| file_stem(p)).collect(),
        frames: rasters.into_iter().map(|r| r.values).collect(),
    })
}

/// Loads ground-truth masks. A missing ground-truth directory yields an
/// empty set; frames without a mask are simply not scored.
pub fn load_ground_truth(path: &Path, options: &LoadOptions) -> Result<GroundTruth> {
    let dir = options.layout.gt_dir(path);
    let mut masks = BTreeMap::new();
    let mut geometry: Option<(usize, usize, PathBuf)> = None;
    if !dir.is_dir() {
        return Ok(GroundTruth {
            width: 0,
            height: 0,
            masks,
        });
    }
    for file in list_images(&dir)? {
        let Some(target) = options.layout.label_target(&file_stem(&file)) else {
            continue;
        };
        let img = open_image(&file)?.to_luma8();
        let (w, h) = (img.width() as usize, img.height() as usize);
        let labels = downscale_labels(
            img.pixels().map(|p| GtLabel::from_gray(p.0[0])).collect(),
            w,
            h,
            options.downscale,
        );
        let (w, h) = (w / options.downscale, h / options.downscale);
        match &geometry {
            None => geometry = Some((w, h, file.clone())),
            Some((gw, gh, _)) if (*gw, *gh) != (w, h) => {
                return Err(Error::GeometryMismatch {
                    path: file,
                    width: *gw,
                    height: *gh,
                    actual_width: w,
                    actual_height: h,
                })
            }
            _ => {}
        }
        masks.insert(target, labels);
    }
    let (width, height) = geometry.map_or((0, 0), |(w, h, _)| (w, h));
    Ok(GroundTruth {
        width,
        height,
        masks,
    })
}

/// Majority vote per block; blocks mixing labels become unknown.
fn downscale_labels(labels: Vec<GtLabel>, w: usize, h: usize, k: usize) -> Vec<GtLabel> {
    if k == 1 {
        return labels;
    }
    let (ow, oh) = (w / k, h / k);
    let mut out = Vec::with_capacity(ow * oh);
    for y in 0..oh {
        for x in 0..ow {
            let first = labels[(y * k) * w + x * k];
            let uniform =
                (0..k).all(|dy| (0..k).all(|dx| labels[(y * k + dy) * w + x * k + dx] == first));
            out.push(if uniform { first } else { GtLabel::Unknown });
        }
    }
    out
}

/// Stacks frames as columns of a `p × n` observation matrix.
pub fn to_observation(seq: &FrameSequence) -> Result<ObservationMatrix> {
    if seq.is_empty() {
        return Err(Error::invalid(
            "cannot build an observation from zero frames",
        ));
    }
    let m = DenseMatrix::from_columns(seq.pixels(), &seq.frames)?;
    ObservationMatrix::new(m, seq.width, seq.height)
}

/// Inverse of the vectorization: column `j` as a row-major frame.
pub fn column_to_frame(obs: &ObservationMatrix, j: usize) -> Vec<f64> {
    obs.matrix().col(j).to_vec()
}

/// Reads an SML manifest: one frame file name (or stem) per line; blank lines
/// and `#` comments are ignored.
pub fn read_manifest(path: &Path) -> Result<Vec<String>> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let names: Vec<String> = text
        .lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('#'))
        .map(str::to_string)
        .collect();
    if names.is_empty() {
        return Err(Error::Manifest {
            path: path.to_path_buf(),
            reason: "lists no frames".into(),
        });
    }
    Ok(names)
}

/// Splits frame indices into (training, mixed) according to manifest entries,
/// matched against frame stems (an entry's extension is ignored).
pub fn split_by_manifest(
    seq: &FrameSequence,
    entries: &[String],
    manifest: &Path,
) -> Result<(Vec<usize>, Vec<usize>)> {
    let mut training = Vec::new();
    for entry in entries {
        let stem = file_stem(Path::new(entry));
        match seq.source_names.iter().position(|s| *s == stem) {
            Some(i) if !training.contains(&i) => training.push(i),
            Some(_) => {}
            None => {
                return Err(Error::Manifest {
                    path: manifest.to_path_buf(),
                    reason: format!("frame {entry} is not in the input sequence"),
                })
            }
        }
    }
    training.sort_unstable();
    let mixed: Vec<usize> = (0..seq.len()).filter(|i| !training.contains(i)).collect();
    if mixed.is_empty() {
        return Err(Error::Manifest {
            path: manifest.to_path_buf(),
            reason: "every frame is listed as training; nothing to decompose".into(),
        });
    }
    Ok((training, mixed))
}
