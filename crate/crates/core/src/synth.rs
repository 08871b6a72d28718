//! Synthetic frame sequences with known low-rank backgrounds and block
//! foregrounds.
//!
//! The background is a sum of `background_rank` separable components
//! `a_r(t) * u_r(x) * v_r(y)` built from positive low-frequency cosines, so
//! its rank is exact by construction. It is scaled into `[0, 0.7]`. The
//! profiles vary by ±25% around their mean, which keeps the background bright
//! relative to typical noise levels.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::fs;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::dataio::{write_frame_png, write_mask_png, FrameSequence, GroundTruth, GtLabel};
use crate::error::{Error, Result};
use crate::matrixkit::DenseMatrix;

const BACKGROUND_PEAK: f64 = 0.7;

/// Axis-aligned foreground block added to one frame.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SynthBlock {
    pub frame: usize,
    pub x: usize,
    pub y: usize,
    pub width: usize,
    pub height: usize,
    pub amplitude: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthSpec {
    pub width: usize,
    pub height: usize,
    pub n_frames: usize,
    pub background_rank: usize,
    #[serde(default)]
    pub blocks: Vec<SynthBlock>,
    #[serde(default)]
    pub noise_std: f64,
    #[serde(default)]
    pub seed: u64,
    /// Indices of frames that must stay free of blocks; listed in the
    /// emitted manifest as pure background.
    #[serde(default)]
    pub training_frames: Vec<usize>,
}

impl SynthSpec {
    pub fn validate(&self) -> Result<()> {
        if self.width == 0 || self.height == 0 || self.n_frames == 0 {
            return Err(Error::invalid(
                "width, height and n_frames must be positive",
            ));
        }
        let p = self.width * self.height;
        if self.background_rank > p.min(self.n_frames) {
            return Err(Error::invalid(format!(
                "background_rank {} exceeds min(p, n) = {}",
                self.background_rank,
                p.min(self.n_frames)
            )));
        }
        if !self.noise_std.is_finite() || self.noise_std < 0.0 {
            return Err(Error::invalid("noise_std must be finite and nonnegative"));
        }
        let mut seen = vec![false; self.n_frames];
        for &t in &self.training_frames {
            if t >= self.n_frames || seen[t] {
                return Err(Error::invalid(format!(
                    "training frame {t} is out of range or listed twice"
                )));
            }
            seen[t] = true;
        }
        if !self.training_frames.is_empty() && self.training_frames.len() == self.n_frames {
            return Err(Error::invalid(
                "training_frames must leave at least one mixed frame",
            ));
        }
        for (k, b) in self.blocks.iter().enumerate() {
            if b.frame >= self.n_frames {
                return Err(Error::invalid(format!(
                    "block {k}: frame {} out of range",
                    b.frame
                )));
            }
            if self.training_frames.contains(&b.frame) {
                return Err(Error::invalid(format!(
                    "block {k}: frame {} is a training frame",
                    b.frame
                )));
            }
            if b.width == 0
                || b.height == 0
                || b.x + b.width > self.width
                || b.y + b.height > self.height
            {
                return Err(Error::invalid(format!(
                    "block {k}: rectangle outside the frame"
                )));
            }
            if !b.amplitude.is_finite() {
                return Err(Error::invalid(format!(
                    "block {k}: amplitude must be finite"
                )));
            }
        }
        Ok(())
    }
}

/// Output of [`generate`].
#[derive(Debug, Clone)]
pub struct SynthData {
    pub sequence: FrameSequence,
    pub ground_truth: GroundTruth,
    pub true_background: DenseMatrix,
    pub true_foreground: DenseMatrix,
    /// Entries of `B* + F* + noise` that fell outside `[0, 1]` and were clamped.
    pub clamped: usize,
    pub training_frames: Vec<usize>,
}

fn profile(len: usize, freq: f64, phase: f64) -> Vec<f64> {
    let denom = (len.max(2) - 1) as f64;
    (0..len)
        .map(|i| 1.0 + 0.25 * (PI * freq * i as f64 / denom + phase).cos())
        .collect()
}

pub fn generate(spec: &SynthSpec) -> Result<SynthData> {
    spec.validate()?;
    let (w, h, n) = (spec.width, spec.height, spec.n_frames);
    let p = w * h;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);

    let mut background = DenseMatrix::zeros(p, n);
    for r in 0..spec.background_rank {
        let base = r as f64;
        let ux = profile(
            w,
            base + rng.random_range(0.3..1.0),
            rng.random_range(0.0..PI),
        );
        let vy = profile(
            h,
            base + rng.random_range(0.3..1.0),
            rng.random_range(0.0..PI),
        );
        let at = profile(
            n,
            2.0 * base + rng.random_range(0.5..2.0),
            rng.random_range(0.0..PI),
        );
        let weight = 1.0 / (1.0 + r as f64);
        for (t, &a) in at.iter().enumerate() {
            let col = background.col_mut(t);
            for y in 0..h {
                for x in 0..w {
                    col[y * w + x] += weight * a * ux[x] * vy[y];
                }
            }
        }
    }
    let peak = background.max_abs();
    if peak > 0.0 {
        let s = BACKGROUND_PEAK / peak;
        background.as_mut_slice().iter_mut().for_each(|v| *v *= s);
    }

    let mut foreground = DenseMatrix::zeros(p, n);
    for b in &spec.blocks {
        for y in b.y..b.y + b.height {
            for x in b.x..b.x + b.width {
                foreground[(y * w + x, b.frame)] += b.amplitude;
            }
        }
    }

    let noise = if spec.noise_std > 0.0 {
        Some(Normal::new(0.0, spec.noise_std).map_err(|e| Error::invalid(e.to_string()))?)
    } else {
        None
    };
    let mut clamped = 0;
    let mut frames = Vec::with_capacity(n);
    for t in 0..n {
        let frame: Vec<f64> = (0..p)
            .map(|i| {
                let mut v = background[(i, t)] + foreground[(i, t)];
                if let Some(dist) = &noise {
                    v += dist.sample(&mut rng);
                }
                if !(0.0..=1.0).contains(&v) {
                    clamped += 1;
                }
                v.clamp(0.0, 1.0)
            })
            .collect();
        frames.push(frame);
    }

    let names: Vec<String> = (0..n).map(frame_name).collect();
    let mut masks = BTreeMap::new();
    for (t, name) in names.iter().enumerate() {
        let labels = foreground
            .col(t)
            .iter()
            .map(|&v| {
                if v != 0.0 {
                    GtLabel::Foreground
                } else {
                    GtLabel::Background
                }
            })
            .collect();
        masks.insert(name.clone(), labels);
    }

    Ok(SynthData {
        sequence: FrameSequence {
            width: w,
            height: h,
            frames,
            source_names: names,
        },
        ground_truth: GroundTruth {
            width: w,
            height: h,
            masks,
        },
        true_background: background,
        true_foreground: foreground,
        clamped,
        training_frames: spec.training_frames.clone(),
    })
}

pub fn frame_name(t: usize) -> String {
    format!("frame_{t:04}")
}

/// Name of the manifest written by [`write_dataset`].
pub const MANIFEST_NAME: &str = "manifest.txt";

/// Writes `frames/*.png`, `gt/*.png` and, when `data` has training frames,
/// `manifest.txt`. Frames are quantized to 8 bits.
pub fn write_dataset(data: &SynthData, dir: &Path) -> Result<()> {
    let frames_dir = dir.join("frames");
    let gt_dir = dir.join("gt");
    for d in [&frames_dir, &gt_dir] {
        fs::create_dir_all(d).map_err(|e| Error::io(d, e))?;
    }
    let seq = &data.sequence;
    for (frame, name) in seq.frames.iter().zip(&seq.source_names) {
        write_frame_png(
            &frames_dir.join(format!("{name}.png")),
            seq.width,
            seq.height,
            frame,
        )?;
        let mask: Vec<bool> = data.ground_truth.masks[name]
            .iter()
            .map(|&l| l == GtLabel::Foreground)
            .collect();
        write_mask_png(
            &gt_dir.join(format!("{name}.png")),
            seq.width,
            seq.height,
            &mask,
        )?;
    }
    if !data.training_frames.is_empty() {
        let list: String = data
            .training_frames
            .iter()
            .map(|&t| format!("{}.png\n", seq.source_names[t]))
            .collect();
        let path = dir.join(MANIFEST_NAME);
        fs::write(&path, list).map_err(|e| Error::io(&path, e))?;
    }
    Ok(())
}

pub fn read_spec(path: &Path) -> Result<SynthSpec> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| Error::Json {
        path: path.to_path_buf(),
        source: e,
    })
}
