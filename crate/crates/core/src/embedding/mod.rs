//! Entity and relation vectors, structure-aware aggregation, semantic
//! clustering and text encoding.

pub mod cluster;
pub mod encoder;
pub mod file;
pub mod store;

pub use cluster::{kmeans_fit, ClusterModel, DEFAULT_CLUSTERS};
pub use encoder::{hash_vector, Namespace, RemoteEncoder, TextEncoder};
pub use file::EmbeddingFile;
pub use store::{aggregate_structure, init_embeddings, BackendSpec, BackendTag, EmbeddingStore, DEFAULT_DIM, DEFAULT_LAYERS};
