//! Preference-aware evidence selection over a knowledge graph for
//! recommendation explanations, plus hallucination metrics that score the
//! resulting explanations.
//!
//! The pipeline, in order:
//!
//! 1. [`kg`] loads triples, the item catalog and user histories.
//! 2. [`embedding`] initializes entity and relation vectors, aggregates graph
//!    structure into them and clusters the result.
//! 3. [`retrieval`] builds a per-target user intent, enumerates one to three
//!    hop reasoning paths, scores them with node specificity and picks a
//!    diverse subset.
//! 4. [`explain`] serializes the subset into a prompt and calls a generator.
//! 5. [`eval`] extracts features from explanations and computes factual and
//!    preference hallucination rates.

// Range checks are written as `!(x >= lo)` so NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod embedding;
pub mod error;
pub mod eval;
pub mod explain;
pub mod http;
pub mod index;
pub mod kg;
pub mod pipeline;
pub mod retrieval;
pub mod text;
pub mod toy;
pub mod vector;

pub use config::EngineConfig;
pub use error::{Error, ErrorKind, Result};
pub use index::Index;
pub use pipeline::Engine;
pub use kg::{ItemCatalog, KnowledgeGraph, UserHistory};
pub use vector::Vector;
