//! Top-k centrality stability of networks under random edge additions.
//!
//! The crate measures how much the top-k vertices by degree, closeness or
//! betweenness change when noise edges are added, and predicts that stability
//! from the unperturbed graph alone.

pub mod bounds;
pub mod centrality;
pub mod config;
pub mod error;
pub mod graph;
pub mod perturbation;
pub mod pipeline;
pub mod stability;
pub mod structure;
pub mod template;

pub use centrality::{CentralityVector, Metric, Ranking};
pub use error::{Error, Result};
pub use graph::{Graph, GraphStats, Vertex};
pub use perturbation::{NoiseSpec, PerturbedTrial};
pub use stability::{StabilityClass, StabilityReport};
