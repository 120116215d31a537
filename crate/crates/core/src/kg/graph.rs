//! Triple store with interned ids and an undirected adjacency view.
//!
//! Entities and relations are interned to dense `u32` handles in order of
//! first appearance. Every triple is reachable from both of its endpoints;
//! the adjacency entry records which way the stored edge points.

use std::collections::{HashMap, HashSet};
use std::fmt;
use std::io::BufRead;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct EntityId(pub u32);

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct RelationId(pub u32);

impl EntityId {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

impl RelationId {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

impl fmt::Display for EntityId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "e{}", self.0)
    }
}

impl fmt::Display for RelationId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "r{}", self.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Triple {
    pub head: EntityId,
    pub relation: RelationId,
    pub tail: EntityId,
}

/// Orientation of a stored triple relative to the node it is viewed from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    /// The viewing node is the triple's head.
    Outgoing,
    /// The viewing node is the triple's tail.
    Incoming,
}

impl Direction {
    pub fn reversed(self) -> Self {
        match self {
            Direction::Outgoing => Direction::Incoming,
            Direction::Incoming => Direction::Outgoing,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Edge {
    pub relation: RelationId,
    pub neighbor: EntityId,
    pub direction: Direction,
}

/// Bidirectional string interner.
#[derive(Debug, Clone, Default)]
struct Interner {
    names: Vec<String>,
    ids: HashMap<String, u32>,
}

impl Interner {
    fn intern(&mut self, name: &str) -> u32 {
        if let Some(&id) = self.ids.get(name) {
            return id;
        }
        let id = self.names.len() as u32;
        self.names.push(name.to_owned());
        self.ids.insert(name.to_owned(), id);
        id
    }

    fn get(&self, name: &str) -> Option<u32> {
        self.ids.get(name).copied()
    }
}

/// Summary of what `load_graph` skipped.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct LoadStats {
    pub lines: usize,
    pub duplicates: usize,
    pub self_loops: usize,
}

#[derive(Debug, Clone)]
pub struct KnowledgeGraph {
    entities: Interner,
    relations: Interner,
    triples: Vec<Triple>,
    adjacency: Vec<Vec<Edge>>,
    stats: LoadStats,
}

impl KnowledgeGraph {
    /// Parses `head<TAB>relation<TAB>tail` lines. Blank lines and lines
    /// starting with `#` are ignored.
    pub fn load<R: BufRead>(reader: R, source_name: &str) -> Result<Self> {
        let mut builder = GraphBuilder::default();
        for (idx, line) in reader.lines().enumerate() {
            let line_no = idx + 1;
            let line = line.map_err(|e| Error::Parse {
                source_name: source_name.to_owned(),
                line: line_no,
                message: e.to_string(),
            })?;
            builder.stats.lines += 1;
            let line = line.trim_end_matches(['\r', '\n']);
            if line.trim().is_empty() || line.starts_with('#') {
                continue;
            }
            let fields: Vec<&str> = line.split('\t').collect();
            if fields.len() != 3 || fields.iter().any(|f| f.trim().is_empty()) {
                return Err(Error::Parse {
                    source_name: source_name.to_owned(),
                    line: line_no,
                    message: format!(
                        "expected 3 non-empty tab-separated fields, found {}",
                        fields.iter().filter(|f| !f.trim().is_empty()).count()
                    ),
                });
            }
            builder.add(fields[0].trim(), fields[1].trim(), fields[2].trim());
        }
        builder.finish()
    }

    pub fn from_str_tsv(text: &str) -> Result<Self> {
        Self::load(text.as_bytes(), "<string>")
    }

    pub fn from_path(path: &std::path::Path) -> Result<Self> {
        let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
        Self::load(std::io::BufReader::new(file), &path.display().to_string())
    }

    /// Rebuilds a graph from explicit name tables and id triples, keeping every id.
    pub fn from_parts(entities: &[String], relations: &[String], triples: &[Triple]) -> Result<Self> {
        let mut b = GraphBuilder::default();
        for name in entities {
            b.entities.intern(name);
        }
        for name in relations {
            b.relations.intern(name);
        }
        if b.entities.names.len() != entities.len() || b.relations.names.len() != relations.len() {
            return Err(Error::IndexFormat("duplicate names in graph tables".into()));
        }
        for &t in triples {
            if t.head.index() >= entities.len() || t.tail.index() >= entities.len() || t.relation.index() >= relations.len()
            {
                return Err(Error::IndexFormat(format!("triple {t:?} references an unknown id")));
            }
            if t.head == t.tail || !b.seen.insert(t) {
                return Err(Error::IndexFormat(format!("self-loop or duplicate triple {t:?}")));
            }
            b.triples.push(t);
        }
        b.finish()
    }

    /// Writes the triples in load order. Reloading reproduces identical ids
    /// when every entity has at least one triple.
    pub fn to_tsv(&self) -> String {
        let mut out = String::new();
        for t in &self.triples {
            out.push_str(self.entity_name(t.head));
            out.push('\t');
            out.push_str(self.relation_name(t.relation));
            out.push('\t');
            out.push_str(self.entity_name(t.tail));
            out.push('\n');
        }
        out
    }

    pub fn num_entities(&self) -> usize {
        self.entities.names.len()
    }

    pub fn num_relations(&self) -> usize {
        self.relations.names.len()
    }

    pub fn triples(&self) -> &[Triple] {
        &self.triples
    }

    pub fn stats(&self) -> LoadStats {
        self.stats
    }

    pub fn entity_ids(&self) -> impl ExactSizeIterator<Item = EntityId> {
        (0..self.num_entities() as u32).map(EntityId)
    }

    pub fn relation_ids(&self) -> impl ExactSizeIterator<Item = RelationId> {
        (0..self.num_relations() as u32).map(RelationId)
    }

    pub fn entity(&self, name: &str) -> Result<EntityId> {
        self.entities
            .get(name)
            .map(EntityId)
            .ok_or_else(|| Error::unknown("entity", name))
    }

    pub fn relation(&self, name: &str) -> Result<RelationId> {
        self.relations
            .get(name)
            .map(RelationId)
            .ok_or_else(|| Error::unknown("relation", name))
    }

    /// Panics if `id` was not produced by this graph.
    pub fn entity_name(&self, id: EntityId) -> &str {
        &self.entities.names[id.index()]
    }

    pub fn relation_name(&self, id: RelationId) -> &str {
        &self.relations.names[id.index()]
    }

    pub fn entity_names(&self) -> &[String] {
        &self.entities.names
    }

    pub fn relation_names(&self) -> &[String] {
        &self.relations.names
    }

    pub fn contains(&self, v: EntityId) -> bool {
        v.index() < self.num_entities()
    }

    /// Incident edges of `v` in `(relation, neighbor, direction)` order.
    pub fn neighbors(&self, v: EntityId) -> Result<&[Edge]> {
        self.adjacency
            .get(v.index())
            .map(Vec::as_slice)
            .ok_or_else(|| Error::unknown("entity", v.to_string()))
    }

    /// Number of incident triples, counting both directions.
    pub fn degree(&self, v: EntityId) -> Result<usize> {
        self.neighbors(v).map(<[Edge]>::len)
    }

    /// True if some triple links `a` and `b` with `relation` in the given orientation
    /// (viewed from `a`).
    pub fn has_edge(&self, a: EntityId, relation: RelationId, b: EntityId, dir: Direction) -> bool {
        let Some(adj) = self.adjacency.get(a.index()) else {
            return false;
        };
        let probe = Edge {
            relation,
            neighbor: b,
            direction: dir,
        };
        adj.binary_search(&probe).is_ok()
    }
}

/// Incremental graph construction. Self-loops intern their entity but add no edge.
#[derive(Debug, Default)]
pub struct GraphBuilder {
    entities: Interner,
    relations: Interner,
    triples: Vec<Triple>,
    seen: HashSet<Triple>,
    stats: LoadStats,
}

impl GraphBuilder {
    pub fn new() -> Self {
        Self::default()
    }

    /// Interns an entity that may have no incident triples.
    pub fn add_entity(&mut self, name: &str) -> EntityId {
        EntityId(self.entities.intern(name))
    }

    pub fn add(&mut self, head: &str, relation: &str, tail: &str) {
        if head == tail {
            self.entities.intern(head);
            self.stats.self_loops += 1;
            return;
        }
        let t = Triple {
            head: EntityId(self.entities.intern(head)),
            relation: RelationId(self.relations.intern(relation)),
            tail: EntityId(self.entities.intern(tail)),
        };
        if self.seen.insert(t) {
            self.triples.push(t);
        } else {
            self.stats.duplicates += 1;
        }
    }

    /// Fails with [`Error::EmptyGraph`] when no triple was added.
    pub fn finish(self) -> Result<KnowledgeGraph> {
        if self.triples.is_empty() {
            return Err(Error::EmptyGraph);
        }
        let mut adjacency = vec![Vec::new(); self.entities.names.len()];
        for t in &self.triples {
            adjacency[t.head.index()].push(Edge {
                relation: t.relation,
                neighbor: t.tail,
                direction: Direction::Outgoing,
            });
            adjacency[t.tail.index()].push(Edge {
                relation: t.relation,
                neighbor: t.head,
                direction: Direction::Incoming,
            });
        }
        for adj in &mut adjacency {
            adj.sort_unstable();
        }
        Ok(KnowledgeGraph {
            entities: self.entities,
            relations: self.relations,
            triples: self.triples,
            adjacency,
            stats: self.stats,
        })
    }
}
