//! Preference-aware path retrieval: intent, specificity, path enumeration,
//! scoring and diversity-aware selection.

pub mod intent;
pub mod mmr;
pub mod paths;
pub mod scoring;
pub mod specificity;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::embedding::{ClusterModel, EmbeddingStore};
use crate::error::{Error, Result};
use crate::kg::{Direction, ItemCatalog, KnowledgeGraph, UserHistory};

pub use intent::{compute_intent, IntentParams, IntentVector, ValueProjection};
pub use mmr::{mmr_select, MmrPick, DEFAULT_GAMMA, DEFAULT_SELECTED};
pub use paths::{enumerate_paths, HopRole, PathSet, ReasoningPath, DEFAULT_CANDIDATE_CAP, MAX_HOPS};
pub use scoring::{score_path, PathScore, ScoredPath};
pub use specificity::{NodeSpecificity, SpecificityContext, SpecificityWeights};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RetrievalConfig {
    pub intent: IntentParams,
    pub weights: SpecificityWeights,
    pub gamma: f64,
    /// Number of paths to select.
    pub paths: usize,
    pub max_hops: usize,
    pub candidate_cap: usize,
    /// Score with node specificity; when off every node counts as 1.
    pub use_specificity: bool,
    /// Diversity-aware selection; when off selection is plain top-N.
    pub use_mmr: bool,
}

impl Default for RetrievalConfig {
    fn default() -> Self {
        RetrievalConfig {
            intent: IntentParams::default(),
            weights: SpecificityWeights::default(),
            gamma: DEFAULT_GAMMA,
            paths: DEFAULT_SELECTED,
            max_hops: MAX_HOPS,
            candidate_cap: DEFAULT_CANDIDATE_CAP,
            use_specificity: true,
            use_mmr: true,
        }
    }
}

impl RetrievalConfig {
    pub fn validate(&self) -> Result<()> {
        self.weights.validate()?;
        if !(0.0..=1.0).contains(&self.gamma) {
            return Err(Error::Config(format!("gamma must be in [0, 1], got {}", self.gamma)));
        }
        if self.paths == 0 {
            return Err(Error::Config("number of selected paths must be at least 1".into()));
        }
        if !(1..=MAX_HOPS).contains(&self.max_hops) {
            return Err(Error::Config(format!("max_hops must be in 1..=3, got {}", self.max_hops)));
        }
        if self.candidate_cap == 0 {
            return Err(Error::Config("candidate cap must be at least 1".into()));
        }
        if !(self.intent.temperature > 0.0) {
            return Err(Error::Config("attention temperature must be positive".into()));
        }
        Ok(())
    }

    /// Gamma actually used for selection.
    pub fn effective_gamma(&self) -> f64 {
        if self.use_mmr {
            self.gamma
        } else {
            1.0
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SelectedPath {
    pub rank: usize,
    pub scored: ScoredPath,
    pub mmr_value: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Retrieval {
    pub user: String,
    pub target: String,
    pub intent: IntentVector,
    pub candidates: usize,
    pub truncated: bool,
    pub selected: Vec<SelectedPath>,
}

impl Retrieval {
    pub fn paths(&self) -> Vec<ReasoningPath> {
        self.selected.iter().map(|s| s.scored.path.clone()).collect()
    }
}

/// Read-only inputs shared by every query.
#[derive(Debug, Clone, Copy)]
pub struct Retriever<'a> {
    pub graph: &'a KnowledgeGraph,
    pub catalog: &'a ItemCatalog,
    pub store: &'a EmbeddingStore,
    pub clusters: &'a ClusterModel,
}

impl<'a> Retriever<'a> {
    pub fn retrieve(&self, history: &UserHistory, target: &str, config: &RetrievalConfig) -> Result<Retrieval> {
        config.validate()?;
        let intent = compute_intent(self.store, self.catalog, history, target, &config.intent)?;
        let candidates = enumerate_paths(
            self.graph,
            self.catalog,
            history,
            target,
            config.max_hops,
            config.candidate_cap,
        )?;
        let ctx = SpecificityContext {
            graph: self.graph,
            store: self.store,
            clusters: self.clusters,
            intent: &intent,
            weights: config.weights,
            enabled: config.use_specificity,
        };
        let scored: Vec<ScoredPath> = candidates
            .paths
            .par_iter()
            .map(|p| score_path(&ctx, p))
            .collect::<Result<_>>()?;
        let scores: Vec<f64> = scored.iter().map(|s| s.score.score).collect();
        let encodings: Vec<_> = scored.iter().map(|s| s.encoding.clone()).collect();
        let picks = mmr_select(&scores, &encodings, config.effective_gamma(), config.paths);
        let selected = picks
            .iter()
            .enumerate()
            .map(|(rank, pick)| SelectedPath {
                rank: rank + 1,
                scored: scored[pick.index].clone(),
                mmr_value: pick.value,
            })
            .collect();
        Ok(Retrieval {
            user: history.user.clone(),
            target: target.to_owned(),
            intent,
            candidates: scored.len(),
            truncated: candidates.truncated,
            selected,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NodeRecord {
    pub entity: String,
    pub structural: f64,
    pub semantic: f64,
    pub preference: f64,
    pub combined: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PathRecord {
    pub rank: usize,
    pub hops: usize,
    pub role: HopRole,
    pub evidence: String,
    pub entities: Vec<String>,
    pub relations: Vec<String>,
    pub directions: Vec<Direction>,
    pub relevance: f64,
    pub specificity: f64,
    pub score: f64,
    pub mmr_value: f64,
    pub nodes: Vec<NodeRecord>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AttentionRecord {
    pub item: String,
    pub weight: f64,
}

/// One JSON-lines export record per (user, target) query.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RetrievalRecord {
    pub user: String,
    pub target: String,
    pub candidates: usize,
    pub truncated: bool,
    pub attention: Vec<AttentionRecord>,
    pub paths: Vec<PathRecord>,
}

impl RetrievalRecord {
    pub fn new(r: &Retrieval, g: &KnowledgeGraph) -> Self {
        let paths = r
            .selected
            .iter()
            .map(|s| {
                let p = &s.scored.path;
                PathRecord {
                    rank: s.rank,
                    hops: p.hops(),
                    role: p.role(),
                    evidence: crate::explain::prompt::render_path(p, g),
                    entities: p.entities.iter().map(|&e| g.entity_name(e).to_owned()).collect(),
                    relations: p.relations.iter().map(|&x| g.relation_name(x).to_owned()).collect(),
                    directions: p.directions.clone(),
                    relevance: s.scored.score.relevance,
                    specificity: s.scored.score.specificity,
                    score: s.scored.score.score,
                    mmr_value: s.mmr_value,
                    nodes: s
                        .scored
                        .score
                        .nodes
                        .iter()
                        .map(|n| NodeRecord {
                            entity: g.entity_name(n.entity).to_owned(),
                            structural: n.structural,
                            semantic: n.semantic,
                            preference: n.preference,
                            combined: n.combined,
                        })
                        .collect(),
                }
            })
            .collect();
        RetrievalRecord {
            user: r.user.clone(),
            target: r.target.clone(),
            candidates: r.candidates,
            truncated: r.truncated,
            attention: r
                .intent
                .weights
                .iter()
                .map(|(item, weight)| AttentionRecord {
                    item: item.clone(),
                    weight: *weight,
                })
                .collect(),
            paths,
        }
    }
}
