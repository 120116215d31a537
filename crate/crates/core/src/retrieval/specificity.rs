//! Multi-view node specificity: a weighted blend of structural (inverse
//! degree), semantic (neighborhood cluster entropy) and preference (intent
//! cosine) scores, each in [0, 1].

use serde::{Deserialize, Serialize};

use crate::embedding::{ClusterModel, EmbeddingStore};
use crate::error::{Error, Result};
use crate::kg::{EntityId, KnowledgeGraph};
use crate::retrieval::intent::IntentVector;
use crate::vector::cosine_unchecked;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SpecificityWeights {
    pub structural: f64,
    pub semantic: f64,
    pub preference: f64,
    /// Degree penalty strength.
    pub penalty: f64,
    /// Degree smoothing; must be at least 1 so the structural score stays <= 1.
    pub smoothing: f64,
}

impl Default for SpecificityWeights {
    fn default() -> Self {
        SpecificityWeights {
            structural: 0.27,
            semantic: 0.31,
            preference: 0.42,
            penalty: 1.0,
            smoothing: 1.0,
        }
    }
}

impl SpecificityWeights {
    pub fn validate(&self) -> Result<()> {
        let ws = [self.structural, self.semantic, self.preference];
        if ws.iter().any(|w| !w.is_finite() || *w < 0.0) {
            return Err(Error::Config(format!("specificity weights must be non-negative, got {ws:?}")));
        }
        let sum: f64 = ws.iter().sum();
        if (sum - 1.0).abs() > 1e-9 {
            return Err(Error::Config(format!("specificity weights must sum to 1, got {sum}")));
        }
        if !(self.penalty > 0.0) || !self.penalty.is_finite() {
            return Err(Error::Config(format!("penalty strength must be positive, got {}", self.penalty)));
        }
        if !(self.smoothing >= 1.0) || !self.smoothing.is_finite() {
            return Err(Error::Config(format!("degree smoothing must be >= 1, got {}", self.smoothing)));
        }
        Ok(())
    }

    pub fn combine(&self, structural: f64, semantic: f64, preference: f64) -> f64 {
        self.structural * structural + self.semantic * semantic + self.preference * preference
    }
}

/// `exp(-penalty * ln(degree + smoothing))`.
pub fn structural(degree: usize, penalty: f64, smoothing: f64) -> f64 {
    (-penalty * (degree as f64 + smoothing).ln()).exp()
}

/// `1 - H/ln k` for a cluster distribution `p` over `k` clusters, with `0 ln 0 = 0`.
pub fn semantic_from_distribution(p: &[f64]) -> f64 {
    let k = p.len();
    if k < 2 {
        return 1.0;
    }
    let h: f64 = p.iter().filter(|&&x| x > 0.0).map(|&x| -x * x.ln()).sum();
    (1.0 - h / (k as f64).ln()).clamp(0.0, 1.0)
}

/// Semantic specificity of `v` from the clusters of its neighbors
/// (counted with multiplicity). Nodes without neighbors score 1.
pub fn semantic(g: &KnowledgeGraph, clusters: &ClusterModel, v: EntityId) -> Result<f64> {
    let edges = g.neighbors(v)?;
    if edges.is_empty() {
        return Ok(1.0);
    }
    let mut counts = vec![0usize; clusters.k()];
    for e in edges {
        let c = clusters
            .cluster_of(e.neighbor)
            .ok_or_else(|| Error::MissingEmbedding(format!("cluster for {}", e.neighbor)))?;
        counts[c] += 1;
    }
    let n = edges.len() as f64;
    let p: Vec<f64> = counts.into_iter().map(|c| c as f64 / n).collect();
    Ok(semantic_from_distribution(&p))
}

/// `(1 + cos(h_v, h_u(i_t))) / 2`.
pub fn preference(store: &EmbeddingStore, v: EntityId, intent: &IntentVector) -> Result<f64> {
    Ok(preference_from_cosine(cosine_unchecked(store.aggregated(v)?, &intent.vector)))
}

pub fn preference_from_cosine(cos: f64) -> f64 {
    ((1.0 + cos) / 2.0).clamp(0.0, 1.0)
}

/// Per-node decomposition kept for audit output.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NodeSpecificity {
    pub entity: EntityId,
    pub structural: f64,
    pub semantic: f64,
    pub preference: f64,
    pub combined: f64,
}

/// Everything needed to score nodes for one (user, target) query.
#[derive(Debug, Clone, Copy)]
pub struct SpecificityContext<'a> {
    pub graph: &'a KnowledgeGraph,
    pub store: &'a EmbeddingStore,
    pub clusters: &'a ClusterModel,
    pub intent: &'a IntentVector,
    pub weights: SpecificityWeights,
    /// When false every node scores 1 (the specificity ablation).
    pub enabled: bool,
}

impl SpecificityContext<'_> {
    pub fn node(&self, v: EntityId) -> Result<NodeSpecificity> {
        if !self.enabled {
            return Ok(NodeSpecificity {
                entity: v,
                structural: 1.0,
                semantic: 1.0,
                preference: 1.0,
                combined: 1.0,
            });
        }
        let s = structural(self.graph.degree(v)?, self.weights.penalty, self.weights.smoothing);
        let m = semantic(self.graph, self.clusters, v)?;
        let p = preference(self.store, v, self.intent)?;
        Ok(NodeSpecificity {
            entity: v,
            structural: s,
            semantic: m,
            preference: p,
            combined: self.weights.combine(s, m, p),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn structural_spot_values() {
        assert_eq!(structural(0, 1.0, 1.0), 1.0);
        assert!((structural(9, 1.0, 1.0) - 0.1).abs() < 1e-12);
        assert!((structural(9, 2.0, 1.0) - 0.01).abs() < 1e-12);
    }

    #[test]
    fn structural_is_non_increasing_in_degree() {
        for pen in [0.5, 1.0, 2.0] {
            let vals: Vec<f64> = (0..=100).map(|d| structural(d, pen, 1.0)).collect();
            assert!(vals.windows(2).all(|w| w[1] <= w[0]));
            assert!(vals.iter().all(|v| (0.0..=1.0).contains(v)));
        }
    }

    #[test]
    fn semantic_spot_values() {
        assert_eq!(semantic_from_distribution(&[1.0, 0.0, 0.0]), 1.0);
        assert!(semantic_from_distribution(&[1.0 / 3.0; 3]).abs() < 1e-12);
        let expected = 1.0 - 2f64.ln() / 3f64.ln();
        assert!((semantic_from_distribution(&[0.5, 0.5, 0.0]) - expected).abs() < 1e-12);
        assert!((expected - 0.3691).abs() < 1e-4);
    }

    #[test]
    fn preference_spot_values() {
        assert_eq!(preference_from_cosine(1.0), 1.0);
        assert_eq!(preference_from_cosine(-1.0), 0.0);
        assert_eq!(preference_from_cosine(0.0), 0.5);
    }

    #[test]
    fn combined_spot_values() {
        let w = SpecificityWeights::default();
        assert!((w.combine(1.0, 1.0, 1.0) - 1.0).abs() < 1e-12);
        assert!((w.combine(1.0, 0.0, 0.0) - 0.27).abs() < 1e-12);
        // 0.27*0.1 + 0.31*1.0 + 0.42*0.5 = 0.027 + 0.31 + 0.21
        assert!((w.combine(0.1, 1.0, 0.5) - 0.547).abs() < 1e-12);
    }

    #[test]
    fn weight_validation() {
        assert!(SpecificityWeights::default().validate().is_ok());
        let bad_sum = SpecificityWeights {
            structural: 0.5,
            ..SpecificityWeights::default()
        };
        assert!(bad_sum.validate().is_err());
        let bad_eps = SpecificityWeights {
            smoothing: 0.5,
            ..SpecificityWeights::default()
        };
        assert!(bad_eps.validate().is_err());
    }
}
