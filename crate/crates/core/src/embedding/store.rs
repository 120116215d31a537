//! Entity and relation vectors plus untrained relational-attention smoothing.

use std::path::PathBuf;
use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::embedding::encoder::{hash_vector, Namespace, RemoteEncoder, TextEncoder};
use crate::embedding::file::EmbeddingFile;
use crate::error::{Error, Result};
use crate::http::HttpSettings;
use crate::kg::{EntityId, KnowledgeGraph, RelationId};
use crate::vector::{cosine_unchecked, softmax, Vector};

pub const DEFAULT_DIM: usize = 64;
pub const DEFAULT_LAYERS: usize = 3;

/// Where base vectors come from.
#[derive(Debug, Clone)]
pub enum BackendSpec {
    Hash { seed: u64, dim: usize },
    File { path: PathBuf, seed: u64 },
    Remote { settings: HttpSettings, dim: Option<usize> },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BackendTag {
    Hash,
    File,
    Http,
}

#[derive(Debug, Clone)]
pub struct EmbeddingStore {
    dim: usize,
    backend: BackendTag,
    entity_base: Vec<Vector>,
    relation_base: Vec<Vector>,
    relation_unit: Vec<Vector>,
    aggregated: Vec<Vector>,
    layers: usize,
    encoder: Arc<TextEncoder>,
}

impl EmbeddingStore {
    /// Builds a store from explicit vectors, indexed by entity and relation id.
    /// Aggregated vectors start as the normalized base vectors.
    pub fn from_vectors(
        entity_base: Vec<Vector>,
        relation_base: Vec<Vector>,
        backend: BackendTag,
        encoder: TextEncoder,
    ) -> Result<Self> {
        let dim = entity_base
            .first()
            .or(relation_base.first())
            .map(Vector::dim)
            .ok_or(Error::EmptyInput("embedding store"))?;
        if dim < 2 {
            return Err(Error::Config(format!("embedding dimension must be at least 2, got {dim}")));
        }
        for v in entity_base.iter().chain(&relation_base) {
            if v.dim() != dim {
                return Err(Error::Dimension {
                    expected: dim,
                    found: v.dim(),
                    context: Some("embedding store".into()),
                });
            }
            if !v.is_finite() {
                return Err(Error::Config("non-finite base vector".into()));
            }
        }
        if let TextEncoder::Hash { dim: d, .. } = &encoder {
            if *d != dim {
                return Err(Error::Dimension {
                    expected: dim,
                    found: *d,
                    context: Some("text encoder".into()),
                });
            }
        }
        let relation_unit = relation_base.iter().map(Vector::normalized).collect();
        let aggregated = entity_base.iter().map(Vector::normalized).collect();
        Ok(EmbeddingStore {
            dim,
            backend,
            entity_base,
            relation_base,
            relation_unit,
            aggregated,
            layers: 0,
            encoder: Arc::new(encoder),
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn backend(&self) -> BackendTag {
        self.backend
    }

    /// Number of aggregation layers applied so far.
    pub fn layers(&self) -> usize {
        self.layers
    }

    pub fn num_entities(&self) -> usize {
        self.entity_base.len()
    }

    pub fn num_relations(&self) -> usize {
        self.relation_base.len()
    }

    pub fn entity_base(&self, v: EntityId) -> Result<&Vector> {
        self.entity_base
            .get(v.index())
            .ok_or_else(|| Error::MissingEmbedding(v.to_string()))
    }

    pub fn relation_base(&self, r: RelationId) -> Result<&Vector> {
        self.relation_base
            .get(r.index())
            .ok_or_else(|| Error::MissingEmbedding(r.to_string()))
    }

    /// Unit-normalized relation vector, the form used in aggregation and path encoding.
    pub fn relation(&self, r: RelationId) -> Result<&Vector> {
        self.relation_unit
            .get(r.index())
            .ok_or_else(|| Error::MissingEmbedding(r.to_string()))
    }

    /// Structure-aware entity vector after the aggregation layers.
    pub fn aggregated(&self, v: EntityId) -> Result<&Vector> {
        self.aggregated
            .get(v.index())
            .ok_or_else(|| Error::MissingEmbedding(v.to_string()))
    }

    pub fn aggregated_all(&self) -> &[Vector] {
        &self.aggregated
    }

    pub fn entity_base_all(&self) -> &[Vector] {
        &self.entity_base
    }

    pub fn relation_base_all(&self) -> &[Vector] {
        &self.relation_base
    }

    pub fn encoder(&self) -> &TextEncoder {
        &self.encoder
    }

    pub fn encode_text(&self, text: &str) -> Result<Vector> {
        let v = self.encoder.encode(text)?;
        if v.dim() != self.dim {
            return Err(Error::Dimension {
                expected: self.dim,
                found: v.dim(),
                context: Some("text encoder output".into()),
            });
        }
        Ok(v)
    }

    /// Normalized mean of the aggregated entity vectors and unit relation
    /// vectors along a path. Independent of traversal order.
    pub fn encode_path(&self, entities: &[EntityId], relations: &[RelationId]) -> Result<Vector> {
        let mut parts = Vec::with_capacity(entities.len() + relations.len());
        for &e in entities {
            parts.push(self.aggregated(e)?);
        }
        for &r in relations {
            parts.push(self.relation(r)?);
        }
        Vector::mean(parts)
            .map(|m| m.normalized())
            .ok_or(Error::EmptyInput("path"))
    }

    /// Copy with every base vector multiplied by `c` and aggregation reset.
    pub fn with_scaled_base(&self, c: f64) -> Self {
        let entity_base: Vec<Vector> = self.entity_base.iter().map(|v| v.scaled(c)).collect();
        let relation_base: Vec<Vector> = self.relation_base.iter().map(|v| v.scaled(c)).collect();
        EmbeddingStore {
            dim: self.dim,
            backend: self.backend,
            relation_unit: relation_base.iter().map(Vector::normalized).collect(),
            aggregated: entity_base.iter().map(Vector::normalized).collect(),
            entity_base,
            relation_base,
            layers: 0,
            encoder: Arc::clone(&self.encoder),
        }
    }

    /// Replaces the aggregated vectors, e.g. when restoring a persisted index.
    pub fn with_aggregated(mut self, aggregated: Vec<Vector>, layers: usize) -> Result<Self> {
        if aggregated.len() != self.entity_base.len() {
            return Err(Error::IndexFormat(format!(
                "{} aggregated vectors for {} entities",
                aggregated.len(),
                self.entity_base.len()
            )));
        }
        if let Some(bad) = aggregated.iter().find(|v| v.dim() != self.dim) {
            return Err(Error::Dimension {
                expected: self.dim,
                found: bad.dim(),
                context: Some("aggregated vectors".into()),
            });
        }
        self.aggregated = aggregated;
        self.layers = layers;
        Ok(self)
    }

    fn check_graph(&self, g: &KnowledgeGraph) -> Result<()> {
        if self.entity_base.len() != g.num_entities() {
            return Err(Error::MissingEmbedding(format!(
                "store has {} entity vectors, graph has {} entities",
                self.entity_base.len(),
                g.num_entities()
            )));
        }
        if self.relation_base.len() < g.num_relations() {
            return Err(Error::MissingEmbedding(format!(
                "relation `{}`",
                g.relation_name(RelationId(self.relation_base.len() as u32))
            )));
        }
        Ok(())
    }
}

/// Creates base vectors for every entity and relation of `g`.
pub fn init_embeddings(g: &KnowledgeGraph, backend: &BackendSpec) -> Result<EmbeddingStore> {
    match backend {
        BackendSpec::Hash { seed, dim } => {
            if *dim < 2 {
                return Err(Error::Config(format!("embedding dimension must be at least 2, got {dim}")));
            }
            let ents = g
                .entity_names()
                .par_iter()
                .map(|n| hash_vector(Namespace::Entity, *seed, n, *dim))
                .collect();
            let rels = g
                .relation_names()
                .iter()
                .map(|n| hash_vector(Namespace::Relation, *seed, n, *dim))
                .collect();
            EmbeddingStore::from_vectors(ents, rels, BackendTag::Hash, TextEncoder::Hash { seed: *seed, dim: *dim })
        }
        BackendSpec::File { path, seed } => {
            let reader = crate::kg::catalog::open(path)?;
            let file = EmbeddingFile::parse(reader, &path.display().to_string())?;
            let dim = file.dim;
            let map = file.into_map();
            let lookup = |kind: &str, name: &str| {
                map.get(name)
                    .cloned()
                    .ok_or_else(|| Error::MissingEmbedding(format!("{kind} `{name}` in {}", path.display())))
            };
            let ents = g
                .entity_names()
                .iter()
                .map(|n| lookup("entity", n))
                .collect::<Result<Vec<_>>>()?;
            let rels = g
                .relation_names()
                .iter()
                .map(|n| lookup("relation", n))
                .collect::<Result<Vec<_>>>()?;
            EmbeddingStore::from_vectors(ents, rels, BackendTag::File, TextEncoder::Hash { seed: *seed, dim })
        }
        BackendSpec::Remote { settings, dim } => {
            let remote = RemoteEncoder::new(settings.clone(), *dim)?;
            let ents = remote.encode_batch(g.entity_names())?;
            let rels = remote.encode_batch(g.relation_names())?;
            EmbeddingStore::from_vectors(ents, rels, BackendTag::Http, TextEncoder::Remote(remote))
        }
    }
}

/// Applies `layers` rounds of relational attention smoothing.
///
/// Per layer, for each entity `v` with neighborhood `N(v)`:
///
/// ```text
/// a(v,u)   = softmax over N(v) of cos(h_v, h_u)
/// m_v      = sum over (r,u) in N(v) of a(v,u) * (h_u + r̂)
/// h_v'     = normalize(h_v + m_v)
/// ```
///
/// `r̂` is the unit relation vector. All entities update from the previous
/// layer's values. Isolated entities keep their normalized base vector.
pub fn aggregate_structure(g: &KnowledgeGraph, store: &EmbeddingStore, layers: usize) -> Result<EmbeddingStore> {
    store.check_graph(g)?;
    let mut h: Vec<Vector> = store.entity_base.iter().map(Vector::normalized).collect();
    for _ in 0..layers {
        h = g
            .entity_ids()
            .collect::<Vec<_>>()
            .par_iter()
            .map(|&v| {
                let edges = g.neighbors(v).expect("entity from graph");
                let hv = &h[v.index()];
                if edges.is_empty() {
                    return hv.clone();
                }
                let sims: Vec<f64> = edges
                    .iter()
                    .map(|e| cosine_unchecked(hv, &h[e.neighbor.index()]))
                    .collect();
                let attn = softmax(&sims);
                let mut next = hv.clone();
                for (e, a) in edges.iter().zip(attn) {
                    next.add_scaled(&h[e.neighbor.index()], a);
                    next.add_scaled(&store.relation_unit[e.relation.index()], a);
                }
                next.normalized()
            })
            .collect();
    }
    let mut out = store.clone();
    out.aggregated = h;
    out.layers = layers;
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn graph() -> KnowledgeGraph {
        KnowledgeGraph::from_str_tsv("a\tr\tb\nb\ts\tc\nc\tr\ta\nd\tr\ta\n").unwrap()
    }

    fn hash_store(g: &KnowledgeGraph) -> EmbeddingStore {
        init_embeddings(g, &BackendSpec::Hash { seed: 11, dim: 16 }).unwrap()
    }

    #[test]
    fn hash_backend_unit_and_deterministic() {
        let g = graph();
        let (s1, s2) = (hash_store(&g), hash_store(&g));
        assert_eq!(s1.entity_base_all(), s2.entity_base_all());
        for v in s1.entity_base_all() {
            assert!((v.norm() - 1.0).abs() < 1e-6);
        }
    }

    #[test]
    fn dim_must_be_at_least_two() {
        assert!(init_embeddings(&graph(), &BackendSpec::Hash { seed: 1, dim: 1 }).is_err());
    }

    #[test]
    fn zero_layers_is_identity() {
        let g = graph();
        let s = hash_store(&g).with_scaled_base(3.0);
        let agg = aggregate_structure(&g, &s, 0).unwrap();
        for v in g.entity_ids() {
            assert_eq!(agg.aggregated(v).unwrap(), &s.entity_base(v).unwrap().normalized());
        }
    }

    #[test]
    fn isolated_node_keeps_base() {
        let g = KnowledgeGraph::from_str_tsv("a\tr\tb\nz\tr\tz\n").unwrap();
        let s = hash_store(&g);
        let z = g.entity("z").unwrap();
        let agg = aggregate_structure(&g, &s, 3).unwrap();
        let (got, base) = (agg.aggregated(z).unwrap(), s.entity_base(z).unwrap());
        assert!(got.iter().zip(base.iter()).all(|(x, y)| (x - y).abs() < 1e-12));
        for v in g.entity_ids() {
            assert!((agg.aggregated(v).unwrap().norm() - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn file_backend_requires_every_name() {
        let g = graph();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("e.emb");
        std::fs::write(&path, "dim=2\na\t1,0\nb\t0,1\nc\t1,1\nr\t1,0\n").unwrap();
        let err = init_embeddings(&g, &BackendSpec::File { path: path.clone(), seed: 0 }).unwrap_err();
        assert!(matches!(err, Error::MissingEmbedding(_)), "{err}");
        std::fs::write(&path, "dim=2\na\t1,0\nb\t0,1\nc\t1,1\nd\t2,0\nr\t1,0\ns\t0,3\n").unwrap();
        let s = init_embeddings(&g, &BackendSpec::File { path, seed: 0 }).unwrap();
        assert_eq!(s.dim(), 2);
        assert_eq!(s.backend(), BackendTag::File);
        assert_eq!(s.relation(g.relation("s").unwrap()).unwrap().as_slice(), &[0.0, 1.0]);
    }

    #[test]
    fn encode_path_is_reversal_invariant() {
        let g = graph();
        let s = aggregate_structure(&g, &hash_store(&g), 2).unwrap();
        let (a, b, c) = (g.entity("a").unwrap(), g.entity("b").unwrap(), g.entity("c").unwrap());
        let (r, t) = (g.relation("r").unwrap(), g.relation("s").unwrap());
        let fwd = s.encode_path(&[a, b, c], &[r, t]).unwrap();
        let rev = s.encode_path(&[c, b, a], &[t, r]).unwrap();
        for (x, y) in fwd.iter().zip(rev.iter()) {
            assert!((x - y).abs() < 1e-12);
        }
    }
}
