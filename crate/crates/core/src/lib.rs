//! Average-case reductions from planted clique to planted dense subgraph
//! models, and the statistics used to test them.

pub mod algorithms;
pub mod design;
pub mod error;
pub mod graph;
pub mod harness;
pub mod kernels;
pub mod linalg;
pub mod model;
pub mod reductions;
pub mod rng;
pub mod scalar;

pub use error::{Error, Result, Stage};
pub use graph::Graph;

pub type RealMatrix = linalg::DenseMatrix<f64>;
