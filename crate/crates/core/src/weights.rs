//! Pixel neighborhoods and the per-frame adaptive fusion weights
//! `w_ij = exp(-(d_i - d_j)² / 2σ²)`.
//!
//! Pixels are indexed row-major, `index = y * width + x`, the same order used
//! to vectorize frames into observation columns.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum Connectivity {
    #[default]
    Four,
    Eight,
}

impl Connectivity {
    pub fn from_count(n: u32) -> Result<Self> {
        match n {
            4 => Ok(Connectivity::Four),
            8 => Ok(Connectivity::Eight),
            other => Err(Error::invalid(format!(
                "connectivity must be 4 or 8, got {other}"
            ))),
        }
    }

    pub fn count(self) -> u32 {
        match self {
            Connectivity::Four => 4,
            Connectivity::Eight => 8,
        }
    }
}

/// Lattice edges `(i, j)` with `i < j`, each unordered pair listed once.
#[derive(Debug, Clone, PartialEq)]
pub struct NeighborGraph {
    width: usize,
    height: usize,
    edges: Vec<(usize, usize)>,
}

impl NeighborGraph {
    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn node_count(&self) -> usize {
        self.width * self.height
    }

    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }
}

/// 4-connected lattice; `2wh - w - h` edges.
pub fn build_neighborhood(width: usize, height: usize) -> Result<NeighborGraph> {
    build_neighborhood_with(width, height, Connectivity::Four)
}

pub fn build_neighborhood_with(
    width: usize,
    height: usize,
    connectivity: Connectivity,
) -> Result<NeighborGraph> {
    if width == 0 || height == 0 {
        return Err(Error::invalid(format!(
            "frame dimensions must be positive, got {width}x{height}"
        )));
    }
    let idx = |x: usize, y: usize| y * width + x;
    let mut edges = Vec::with_capacity(4 * width * height);
    for y in 0..height {
        for x in 0..width {
            let i = idx(x, y);
            if x + 1 < width {
                edges.push((i, idx(x + 1, y)));
            }
            if y + 1 < height {
                edges.push((i, idx(x, y + 1)));
                if connectivity == Connectivity::Eight {
                    if x + 1 < width {
                        edges.push((i, idx(x + 1, y + 1)));
                    }
                    if x > 0 {
                        // (x-1, y+1) has a larger index than (x, y)
                        edges.push((i, idx(x - 1, y + 1)));
                    }
                }
            }
        }
    }
    Ok(NeighborGraph {
        width,
        height,
        edges,
    })
}

/// Fusion weights of one frame, aligned with [`NeighborGraph::edges`].
#[derive(Debug, Clone, PartialEq)]
pub struct EdgeWeights(pub Vec<f64>);

impl EdgeWeights {
    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

/// Gaussian similarity weights for one frame.
///
/// `sigma == 0` yields all-zero weights: the fused penalty switches off and
/// the model degenerates to plain sparse foregrounds.
pub fn compute_weights(frame: &[f64], graph: &NeighborGraph, sigma: f64) -> Result<EdgeWeights> {
    if frame.len() != graph.node_count() {
        return Err(Error::ShapeMismatch {
            expected: format!("frame of {} pixels", graph.node_count()),
            actual: format!("{} pixels", frame.len()),
        });
    }
    if sigma.is_nan() || sigma < 0.0 {
        return Err(Error::invalid(format!(
            "sigma must be nonnegative, got {sigma}"
        )));
    }
    if sigma == 0.0 {
        return Ok(EdgeWeights(vec![0.0; graph.edge_count()]));
    }
    let denom = 2.0 * sigma * sigma;
    Ok(EdgeWeights(
        graph
            .edges
            .iter()
            .map(|&(i, j)| {
                let d = frame[i] - frame[j];
                (-(d * d) / denom).exp()
            })
            .collect(),
    ))
}
