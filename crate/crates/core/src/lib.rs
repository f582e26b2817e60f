//! Subtree-centric generation of weighted undirected graphs.
//!
//! A source graph is decomposed into entropy-ranked k-hop trees, each tree
//! is embedded by a shared GCN, node and tree embeddings exchange messages
//! over their membership bipartite graph, and a two-headed pairwise decoder
//! predicts edge existence and edge weight for every node pair.
//!
//! Everything needed to train and evaluate the model is in this crate:
//!
//! - [`graph`]: weighted graphs, validation, CSV I/O
//! - [`subtree`]: root ranking and k-hop tree extraction
//! - [`autodiff`]: the dense reverse-mode engine used for training
//! - [`model`]: encoder, aggregator, decoder, checkpoints
//! - [`train`]: composite loss, Adam, k-fold splits, the training loop
//! - [`metrics`]: edge, centrality and spectral evaluation metrics
//! - [`synth`]: a seeded modular graph generator and dataset writer
//! - [`cli`]: the command-line front end

pub mod autodiff;
pub mod cli;
pub mod graph;
pub mod metrics;
pub mod model;
pub mod subtree;
pub mod synth;
pub mod train;

pub use graph::{BinaryGraph, GraphError, GraphPair, WeightedGraph};
pub use model::{Checkpoint, DecodedGraph, ModelConfig, ModelParams};
pub use subtree::{RootRanking, Subtree};
pub use synth::SynthConfig;
pub use train::{TrainConfig, TrainHistory};
