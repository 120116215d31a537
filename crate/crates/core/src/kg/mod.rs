//! Knowledge graph, item catalog and user histories.

pub mod catalog;
pub mod graph;

pub use catalog::{
    FeatureMention, Histories, Interaction, Item, ItemCatalog, Polarity, UserHistory, DEFAULT_MAX_HISTORY,
};
pub use graph::{Direction, Edge, EntityId, KnowledgeGraph, LoadStats, RelationId, Triple};
