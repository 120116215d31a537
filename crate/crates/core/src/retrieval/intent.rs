//! Target-aware user intent: attention over history items with the target
//! item as the query.

use serde::{Deserialize, Serialize};

use crate::embedding::EmbeddingStore;
use crate::error::{Error, Result};
use crate::kg::{ItemCatalog, UserHistory};
use crate::vector::{cosine_unchecked, softmax, Vector};

pub const DEFAULT_TEMPERATURE: f64 = 0.1;

/// Square value projection applied to history vectors. Identity when absent.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValueProjection {
    rows: Vec<Vector>,
}

impl ValueProjection {
    pub fn new(rows: Vec<Vector>) -> Result<Self> {
        let d = rows.len();
        if d == 0 || rows.iter().any(|r| r.dim() != d) {
            return Err(Error::Config("value projection must be a non-empty square matrix".into()));
        }
        if rows.iter().any(|r| !r.is_finite()) {
            return Err(Error::Config("value projection has non-finite entries".into()));
        }
        Ok(ValueProjection { rows })
    }

    /// One row per line, components separated by commas or whitespace.
    pub fn parse(text: &str) -> Result<Self> {
        let rows = text
            .lines()
            .filter(|l| !l.trim().is_empty() && !l.trim_start().starts_with('#'))
            .map(|l| {
                l.split(|c: char| c == ',' || c.is_whitespace())
                    .filter(|t| !t.is_empty())
                    .map(|t| t.parse::<f64>())
                    .collect::<std::result::Result<Vec<_>, _>>()
                    .map(Vector::new)
                    .map_err(|e| Error::Config(format!("value projection: {e}")))
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(rows)
    }

    pub fn dim(&self) -> usize {
        self.rows.len()
    }

    pub fn apply(&self, v: &Vector) -> Vector {
        Vector::new(self.rows.iter().map(|r| r.dot(v)).collect())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IntentParams {
    pub temperature: f64,
    pub value_projection: Option<ValueProjection>,
}

impl Default for IntentParams {
    fn default() -> Self {
        IntentParams {
            temperature: DEFAULT_TEMPERATURE,
            value_projection: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IntentVector {
    pub user: String,
    pub target: String,
    pub vector: Vector,
    /// Attention weight per history item, in history order.
    pub weights: Vec<(String, f64)>,
}

/// `h_u(i_t) = sum_h alpha_h * W_V h_h`, with
/// `alpha = softmax_h(cos(h_target, h_h) / temperature)` over aggregated vectors.
pub fn compute_intent(
    store: &EmbeddingStore,
    catalog: &ItemCatalog,
    history: &UserHistory,
    target: &str,
    params: &IntentParams,
) -> Result<IntentVector> {
    if history.interactions.is_empty() {
        return Err(Error::EmptyInput("user history"));
    }
    if !(params.temperature > 0.0) {
        return Err(Error::Config(format!("attention temperature must be positive, got {}", params.temperature)));
    }
    let query = store.aggregated(catalog.get(target)?.entity)?;
    let keys = history
        .items()
        .map(|it| store.aggregated(catalog.get(it)?.entity))
        .collect::<Result<Vec<_>>>()?;
    let logits: Vec<f64> = keys
        .iter()
        .map(|k| cosine_unchecked(query, k) / params.temperature)
        .collect();
    let alpha = softmax(&logits);
    let mut vector = Vector::zeros(store.dim());
    for (k, &a) in keys.iter().zip(&alpha) {
        match &params.value_projection {
            Some(w) => {
                if w.dim() != store.dim() {
                    return Err(Error::Dimension {
                        expected: store.dim(),
                        found: w.dim(),
                        context: Some("value projection".into()),
                    });
                }
                vector.add_scaled(&w.apply(k), a);
            }
            None => vector.add_scaled(k, a),
        }
    }
    Ok(IntentVector {
        user: history.user.clone(),
        target: target.to_owned(),
        vector,
        weights: history.items().map(str::to_owned).zip(alpha).collect(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::embedding::{aggregate_structure, init_embeddings, BackendSpec};
    use crate::kg::{Interaction, KnowledgeGraph};

    fn setup() -> (KnowledgeGraph, ItemCatalog, EmbeddingStore) {
        let g = KnowledgeGraph::from_str_tsv(
            "t\tr\tx\nh1\tr\tx\nh2\ts\ty\nh3\tr\tz\nt\ts\tz\nh1\ts\ty\n",
        )
        .unwrap();
        let cat = ItemCatalog::from_str_jsonl(
            "{\"item\":\"t\"}\n{\"item\":\"h1\"}\n{\"item\":\"h2\"}\n{\"item\":\"h3\"}\n",
            &g,
        )
        .unwrap();
        let s = init_embeddings(&g, &BackendSpec::Hash { seed: 5, dim: 8 }).unwrap();
        let s = aggregate_structure(&g, &s, 2).unwrap();
        (g, cat, s)
    }

    fn hist(items: &[&str]) -> UserHistory {
        let inter = items
            .iter()
            .enumerate()
            .map(|(i, it)| Interaction {
                item: it.to_string(),
                timestamp: i as i64,
                features: vec![],
            })
            .collect();
        UserHistory::new("u", inter, 10)
    }

    #[test]
    fn single_item_history() {
        let (g, cat, s) = setup();
        let iv = compute_intent(&s, &cat, &hist(&["h1"]), "t", &IntentParams::default()).unwrap();
        assert_eq!(iv.weights, vec![("h1".to_string(), 1.0)]);
        assert_eq!(&iv.vector, s.aggregated(g.entity("h1").unwrap()).unwrap());
    }

    #[test]
    fn duplicated_history_item_splits_evenly() {
        let (_, cat, s) = setup();
        let iv = compute_intent(&s, &cat, &hist(&["h2", "h2"]), "t", &IntentParams::default()).unwrap();
        assert_eq!(iv.weights[0].1, 0.5);
        assert_eq!(iv.weights[1].1, 0.5);
    }

    #[test]
    fn three_items_match_softmax_of_cosines() {
        let (g, cat, s) = setup();
        let iv = compute_intent(&s, &cat, &hist(&["h1", "h2", "h3"]), "t", &IntentParams::default()).unwrap();
        // oracle: plain loops over raw slices
        let q = s.aggregated(g.entity("t").unwrap()).unwrap().as_slice().to_vec();
        let cos = |a: &[f64], b: &[f64]| {
            let d: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
            let na: f64 = a.iter().map(|x| x * x).sum::<f64>().sqrt();
            let nb: f64 = b.iter().map(|x| x * x).sum::<f64>().sqrt();
            d / (na * nb)
        };
        let logits: Vec<f64> = ["h1", "h2", "h3"]
            .iter()
            .map(|n| cos(&q, s.aggregated(g.entity(n).unwrap()).unwrap()) / 0.1)
            .collect();
        let z: f64 = logits.iter().map(|l| l.exp()).sum();
        let total: f64 = iv.weights.iter().map(|w| w.1).sum();
        assert!((total - 1.0).abs() < 1e-12);
        for (l, (_, w)) in logits.iter().zip(&iv.weights) {
            assert!((l.exp() / z - w).abs() < 1e-9);
        }
    }

    #[test]
    fn empty_history_and_unknown_target() {
        let (_, cat, s) = setup();
        assert!(matches!(
            compute_intent(&s, &cat, &hist(&[]), "t", &IntentParams::default()),
            Err(Error::EmptyInput(_))
        ));
        assert!(compute_intent(&s, &cat, &hist(&["h1"]), "nope", &IntentParams::default()).is_err());
    }

    #[test]
    fn value_projection_is_applied() {
        let (g, cat, s) = setup();
        let rows = (0..8)
            .map(|i| Vector::new((0..8).map(|j| if i == j { 2.0 } else { 0.0 }).collect()))
            .collect();
        let params = IntentParams {
            value_projection: Some(ValueProjection::new(rows).unwrap()),
            ..IntentParams::default()
        };
        let iv = compute_intent(&s, &cat, &hist(&["h1"]), "t", &params).unwrap();
        assert_eq!(iv.vector, s.aggregated(g.entity("h1").unwrap()).unwrap().scaled(2.0));
        assert!(ValueProjection::parse("1,0\n0,1,2\n").is_err());
        assert_eq!(ValueProjection::parse("1 0\n0, 1\n").unwrap().dim(), 2);
    }
}
