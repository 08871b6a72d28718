//! Background subtraction by low-rank plus generalized fused lasso decomposition.
//!
//! A video is stacked into a pixels-by-frames matrix `D`. The unsupervised
//! solver splits `D = B + F` with `B` low rank and `F` sparse and spatially
//! smooth over a pixel graph; the supervised solver expresses the background
//! of new frames as a sparse combination `D1 S` of pure background frames.
//!
//! ```
//! use gflbs::{solve_uml, ObservationMatrix, SolverConfig, DenseMatrix};
//!
//! let d = DenseMatrix::from_fn(16, 5, |i, _| 0.2 + 0.01 * i as f64);
//! let obs = ObservationMatrix::new(d, 4, 4).unwrap();
//! let res = solve_uml(&obs, &SolverConfig::default()).unwrap();
//! assert_eq!(res.background.shape(), (16, 5));
//! ```

pub mod cli;
pub mod dataio;
pub mod error;
pub mod eval;
pub mod graphflow;
pub mod matrixkit;
pub mod observation;
pub mod prox;
pub mod solver;
pub mod synth;
pub mod weights;

pub use error::{Error, Result};
pub use matrixkit::{svd, DenseMatrix, SvdFactors};
pub use observation::ObservationMatrix;
pub use prox::{prox_gfl, prox_nuclear, GflParams};
pub use solver::{
    solve_sml, solve_uml, DecompositionResult, SmlProblem, SolverConfig, TraceRecord,
};
pub use weights::{build_neighborhood, compute_weights, Connectivity, EdgeWeights, NeighborGraph};
