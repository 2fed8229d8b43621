//! Structural-entropy clustering of message graphs.
//!
//! The crate builds a weighted message graph from attribute overlap and
//! embedding similarity, picks the number of semantic neighbours by
//! incremental one-dimensional structural entropy minimization, and then
//! partitions the graph by greedy two-dimensional structural entropy
//! minimization, either over the whole graph or hierarchically over
//! fixed-size batches of clusters.
//!
//! All entropy math is generic over [`Scalar`] (`f32` or `f64`); the aliases
//! at the crate root fix the scalar to `f64`, which is what the pipeline uses.
//!
//! ```
//! use secluster::{Graph, Partition, entropy, tree::two_level_tree};
//!
//! let graph = Graph::from_edges(4, [(0, 1, 1.0), (1, 2, 1.0), (2, 3, 1.0), (3, 0, 1.0)]).unwrap();
//! assert_eq!(entropy::se_1d(&graph).value, 2.0);
//!
//! let singletons = Partition::singletons(4);
//! let tree = two_level_tree(&graph, &singletons).unwrap();
//! assert!((entropy::se_tree(&graph, &tree).unwrap().value - 2.0).abs() < 1e-12);
//! ```

pub mod entropy;
pub mod error;
pub mod graph;
pub mod io;
pub mod knn;
pub mod metrics;
pub mod minimize;
pub mod partition;
pub mod pipeline;
pub mod scalar;
pub mod synth;
pub mod tree;

pub use error::{Error, Result};
pub use graph::{NodeId, WeightedGraph};
pub use partition::Partition;
pub use scalar::Scalar;
pub use tree::{EncodingTree, TreeNodeId};

/// Message graph with `f64` weights.
pub type Graph = WeightedGraph<f64>;
/// Encoding tree over an `f64` graph.
pub type Tree = EncodingTree<f64>;
/// Message graph with `f32` weights.
pub type Graph32 = WeightedGraph<f32>;
/// Encoding tree over an `f32` graph.
pub type Tree32 = EncodingTree<f32>;
/// Message record carrying an `f64` embedding.
pub type Message = knn::MessageRecord<f64>;
