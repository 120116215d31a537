//! Persisted index: graph, base and aggregated vectors, and cluster model.
//!
//! Layout of an index directory:
//!
//! ```text
//! manifest.json      format tag, version, counts, embedding settings
//! graph.json         entity and relation name tables plus id triples
//! entities.emb       base entity vectors       (dim=<d> text format)
//! relations.emb      base relation vectors
//! aggregated.emb     structure-aggregated entity vectors
//! clusters.json      k-means centroids and assignment
//! ```
//!
//! Writing the same index twice produces byte-identical files.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::embedding::{
    aggregate_structure, init_embeddings, kmeans_fit, BackendSpec, BackendTag, ClusterModel, EmbeddingFile,
    EmbeddingStore, TextEncoder,
};
use crate::error::{Error, Result};
use crate::kg::{EntityId, KnowledgeGraph, LoadStats, RelationId, Triple};
use crate::vector::Vector;

pub const INDEX_MAGIC: &str = "EVIPATH-INDEX";
pub const INDEX_FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub magic: String,
    pub format_version: u32,
    pub entities: usize,
    pub relations: usize,
    pub triples: usize,
    pub duplicates_skipped: usize,
    pub self_loops_skipped: usize,
    pub backend: BackendTag,
    pub dim: usize,
    pub layers: usize,
    pub clusters: usize,
    pub cluster_iterations: usize,
    pub seed: u64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct GraphFile {
    entities: Vec<String>,
    relations: Vec<String>,
    triples: Vec<[u32; 3]>,
}

#[derive(Debug, Clone)]
pub struct Index {
    pub manifest: Manifest,
    pub graph: KnowledgeGraph,
    pub store: EmbeddingStore,
    pub clusters: ClusterModel,
}

impl Index {
    /// Initializes, aggregates and clusters embeddings for `graph`.
    pub fn build(graph: KnowledgeGraph, backend: &BackendSpec, layers: usize, clusters: usize, seed: u64) -> Result<Self> {
        let base = init_embeddings(&graph, backend)?;
        let store = aggregate_structure(&graph, &base, layers)?;
        if clusters > graph.num_entities() {
            return Err(Error::Config(format!(
                "{clusters} clusters requested for {} entities",
                graph.num_entities()
            )));
        }
        let model = kmeans_fit(store.aggregated_all(), clusters, seed)?;
        let stats: LoadStats = graph.stats();
        let manifest = Manifest {
            magic: INDEX_MAGIC.into(),
            format_version: INDEX_FORMAT_VERSION,
            entities: graph.num_entities(),
            relations: graph.num_relations(),
            triples: graph.triples().len(),
            duplicates_skipped: stats.duplicates,
            self_loops_skipped: stats.self_loops,
            backend: store.backend(),
            dim: store.dim(),
            layers,
            clusters,
            cluster_iterations: model.iterations,
            seed,
        };
        Ok(Index {
            manifest,
            graph,
            store,
            clusters: model,
        })
    }

    pub fn save(&self, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        let g = &self.graph;
        let graph = GraphFile {
            entities: g.entity_names().to_vec(),
            relations: g.relation_names().to_vec(),
            triples: g.triples().iter().map(|t| [t.head.0, t.relation.0, t.tail.0]).collect(),
        };
        let entity_file = |vs: &[Vector]| EmbeddingFile {
            dim: self.store.dim(),
            entries: g.entity_names().iter().cloned().zip(vs.iter().cloned()).collect(),
        };
        let relations = EmbeddingFile {
            dim: self.store.dim(),
            entries: g
                .relation_names()
                .iter()
                .cloned()
                .zip(self.store.relation_base_all().iter().cloned())
                .collect(),
        };
        write(dir, "manifest.json", &(serde_json::to_string_pretty(&self.manifest)? + "\n"))?;
        write(dir, "graph.json", &(serde_json::to_string(&graph)? + "\n"))?;
        write(dir, "entities.emb", &entity_file(self.store.entity_base_all()).render())?;
        write(dir, "relations.emb", &relations.render())?;
        write(dir, "aggregated.emb", &entity_file(self.store.aggregated_all()).render())?;
        write(dir, "clusters.json", &(serde_json::to_string(&self.clusters)? + "\n"))?;
        Ok(())
    }

    /// Loads an index. `encoder` supplies feature-text encoding, which is not
    /// persisted; its dimension must match the stored vectors.
    pub fn load(dir: &Path, encoder: TextEncoder) -> Result<Self> {
        let manifest: Manifest = serde_json::from_str(&read(dir, "manifest.json")?)
            .map_err(|e| Error::IndexFormat(format!("manifest.json: {e}")))?;
        if manifest.magic != INDEX_MAGIC {
            return Err(Error::IndexFormat(format!("{} is not an index directory", dir.display())));
        }
        if manifest.format_version != INDEX_FORMAT_VERSION {
            return Err(Error::IndexFormat(format!(
                "index format version {} is not supported (expected {INDEX_FORMAT_VERSION})",
                manifest.format_version
            )));
        }
        let gf: GraphFile = serde_json::from_str(&read(dir, "graph.json")?)
            .map_err(|e| Error::IndexFormat(format!("graph.json: {e}")))?;
        let triples: Vec<Triple> = gf
            .triples
            .iter()
            .map(|&[h, r, t]| Triple {
                head: EntityId(h),
                relation: RelationId(r),
                tail: EntityId(t),
            })
            .collect();
        let graph = KnowledgeGraph::from_parts(&gf.entities, &gf.relations, &triples)?;

        let entities = read_vectors(dir, "entities.emb", graph.entity_names(), manifest.dim)?;
        let relations = read_vectors(dir, "relations.emb", graph.relation_names(), manifest.dim)?;
        let aggregated = read_vectors(dir, "aggregated.emb", graph.entity_names(), manifest.dim)?;
        let store = EmbeddingStore::from_vectors(entities, relations, manifest.backend, encoder)?
            .with_aggregated(aggregated, manifest.layers)?;
        let clusters: ClusterModel = serde_json::from_str(&read(dir, "clusters.json")?)
            .map_err(|e| Error::IndexFormat(format!("clusters.json: {e}")))?;
        if clusters.assignment.len() != graph.num_entities() || clusters.k() != manifest.clusters {
            return Err(Error::IndexFormat("cluster model does not match the graph".into()));
        }
        if manifest.entities != graph.num_entities() || manifest.triples != graph.triples().len() {
            return Err(Error::IndexFormat("manifest counts do not match graph.json".into()));
        }
        Ok(Index {
            manifest,
            graph,
            store,
            clusters,
        })
    }
}

fn write(dir: &Path, name: &str, text: &str) -> Result<()> {
    let path = dir.join(name);
    std::fs::write(&path, text).map_err(|e| Error::io(&path, e))
}

fn read(dir: &Path, name: &str) -> Result<String> {
    let path = dir.join(name);
    std::fs::read_to_string(&path).map_err(|e| Error::io(&path, e))
}

fn read_vectors(dir: &Path, name: &str, names: &[String], dim: usize) -> Result<Vec<Vector>> {
    let path = dir.join(name);
    let file = EmbeddingFile::parse(read(dir, name)?.as_bytes(), &path.display().to_string())?;
    if file.dim != dim {
        return Err(Error::Dimension {
            expected: dim,
            found: file.dim,
            context: Some(name.into()),
        });
    }
    if file.entries.len() != names.len() || file.entries.iter().zip(names).any(|((n, _), m)| n != m) {
        return Err(Error::IndexFormat(format!("{name} does not list the graph's names in id order")));
    }
    Ok(file.entries.into_iter().map(|(_, v)| v).collect())
}
