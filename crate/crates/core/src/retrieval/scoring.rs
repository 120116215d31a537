use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::retrieval::paths::ReasoningPath;
use crate::retrieval::specificity::{NodeSpecificity, SpecificityContext};
use crate::vector::{cosine_unchecked, Vector};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PathScore {
    /// Cosine between the user intent and the path encoding.
    pub relevance: f64,
    /// Mean combined specificity over the evidence nodes.
    pub specificity: f64,
    /// `relevance * specificity`.
    pub score: f64,
    pub nodes: Vec<NodeSpecificity>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScoredPath {
    pub path: ReasoningPath,
    pub score: PathScore,
    pub encoding: Vector,
}

/// Scores a path as intent relevance times mean node specificity over every
/// entity on the path except the target.
pub fn score_path(ctx: &SpecificityContext<'_>, path: &ReasoningPath) -> Result<ScoredPath> {
    let encoding = ctx.store.encode_path(&path.entities, &path.relations)?;
    let relevance = cosine_unchecked(&ctx.intent.vector, &encoding);
    let nodes = path
        .evidence_nodes()
        .map(|v| ctx.node(v))
        .collect::<Result<Vec<_>>>()?;
    let specificity = if nodes.is_empty() {
        1.0
    } else {
        nodes.iter().map(|n| n.combined).sum::<f64>() / nodes.len() as f64
    };
    Ok(ScoredPath {
        path: path.clone(),
        score: PathScore {
            relevance,
            specificity,
            score: relevance * specificity,
            nodes,
        },
        encoding,
    })
}
