//! Robust multi-structure geometric model fitting by mode seeking on hypergraphs.
//!
//! The pipeline samples model hypotheses from minimal subsets, builds a
//! hypergraph whose vertices are hypotheses and whose hyperedges are data
//! points, weights every vertex by a kernel density estimate over its
//! inliers, prunes insignificant vertices with an entropy threshold and
//! finally selects the vertices that are both locally heaviest and far (in
//! Tanimoto distance) from any heavier vertex. The number of selected
//! vertices is the number of model instances.

pub mod data;
pub mod error;
pub mod evaluation;
pub mod hypergraph;
pub mod io;
pub mod mode_seeking;
pub mod model;
pub mod pipeline;
pub mod sampling;
pub mod scale;

pub use data::DataSet;
pub use error::{DataError, ModelError};
pub use model::{fit_minimal, minimal_subset_size, residual, ModelKind, ModelParams};
