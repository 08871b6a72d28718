//! Min-cut engine and the exact weighted TV proximal operator built on it.

mod maxflow;
mod tv;

pub use maxflow::{max_flow, FlowNetwork, MinCut, PairArc};
pub use tv::{tv_objective, tv_prox, tv_value};
