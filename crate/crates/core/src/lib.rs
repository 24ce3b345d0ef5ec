//! Data-centric analysis of graph contrastive learning.
//!
//! Synthetic motif benchmarks, augmentations as graph-edit compositions,
//! graph edit distance, the population augmentation graph with its
//! recoverability and separability quantities, spectral embeddings, and the
//! evaluation metrics built on them.

pub mod augment;
pub mod ged;
pub mod graph;
pub mod io;
pub mod iso;
pub mod metrics;
pub mod pag;
pub mod seed;
pub mod spectral;
pub mod synthgen;
pub mod wl;

pub use graph::{AttributedGraph, LabeledGraph, NodeId, MASK};
