//! Clustering of multiplex networks whose layers fall into groups that share
//! a community structure while keeping layer-specific block probabilities.
//!
//! The pipeline has two stages:
//!
//! * **Between-layer clustering** ([`between`]): each layer is centered and
//!   reduced to a rank `K-1` approximation ([`embed`]); every layer is then
//!   written as a sparse combination of the others by a LASSO solved on the
//!   layers' Gram matrix ([`lasso`]); the symmetrized weight magnitudes are
//!   spectrally clustered, and surplus disconnected components are merged
//!   by clustering their mean Gram similarity.
//! * **Within-layer clustering** ([`within`]): bias-adjusted squared adjacency
//!   matrices are averaged per estimated layer group and spectrally clustered
//!   into `K` communities.
//!
//! [`generator`] samples synthetic networks with known ground truth,
//! [`metrics`] scores estimates up to label permutation, [`baseline`] is the
//! spectral projection method used for comparison, and [`harness`] runs
//! Monte Carlo grids, reads and filters real datasets, and draws plots.

pub mod baseline;
pub mod between;
pub mod embed;
pub mod error;
pub mod generator;
pub mod harness;
pub mod lasso;
pub mod linalg;
pub mod metrics;
pub mod rng;
pub mod types;
pub mod within;

pub use error::{Error, Result};
pub use types::{AdjacencyTensor, ClusteringAssignment, GramMatrix, GroundTruthModel};
