use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

/// Directory conventions for frames and ground truth.
///
/// * `Generic`: frames in `<root>/frames/` (or `<root>` itself when there is
///   no `frames/` subdirectory), ground truth in `<root>/gt/` with the same
///   file stems as the frames.
/// * `Wallflower`: frames `bNNNNN.*` and a single `hand_segmented_NNNNN.*`
///   ground-truth file in the sequence directory.
/// * `Li`: frames `<name>NNNN.*` with ground truth `gt_<name>NNNN.*` or
///   `gt_new_<name>NNNN.*`, either next to the frames or under `gt/`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum DatasetLayout {
    #[default]
    Generic,
    Wallflower,
    Li,
}

const WALLFLOWER_GT_PREFIX: &str = "hand_segmented_";

impl DatasetLayout {
    pub fn frame_dir(self, root: &Path) -> PathBuf {
        match self {
            DatasetLayout::Generic => {
                let frames = root.join("frames");
                if frames.is_dir() {
                    frames
                } else {
                    root.to_path_buf()
                }
            }
            DatasetLayout::Wallflower | DatasetLayout::Li => root.to_path_buf(),
        }
    }

    pub fn gt_dir(self, root: &Path) -> PathBuf {
        match self {
            DatasetLayout::Generic => root.join("gt"),
            DatasetLayout::Wallflower => root.to_path_buf(),
            DatasetLayout::Li => {
                let gt = root.join("gt");
                if gt.is_dir() {
                    gt
                } else {
                    root.to_path_buf()
                }
            }
        }
    }

    /// Whether a file stem in the frame directory is a ground-truth file.
    pub fn is_ground_truth(self, stem: &str) -> bool {
        self.gt_frame_stem(stem).is_some()
    }

    /// Maps a ground-truth file stem to the stem of the frame it labels.
    pub fn gt_frame_stem(self, stem: &str) -> Option<String> {
        match self {
            DatasetLayout::Generic => None,
            DatasetLayout::Wallflower => stem
                .strip_prefix(WALLFLOWER_GT_PREFIX)
                .map(|digits| format!("b{digits}")),
            DatasetLayout::Li => stem
                .strip_prefix("gt_new_")
                .or_else(|| stem.strip_prefix("gt_"))
                .map(str::to_string),
        }
    }

    /// Stem of the frame labelled by a file found in [`gt_dir`](Self::gt_dir).
    pub(crate) fn label_target(self, stem: &str) -> Option<String> {
        match self {
            DatasetLayout::Generic => Some(stem.to_string()),
            _ => self.gt_frame_stem(stem),
        }
    }
}
